/** One transport driving many players, each shifted by its dashboard offset.
 *
 * A member's mapped time is master_time - offset. Members whose mapped time
 * falls outside their own duration are paused; in-range members are re-seeked
 * whenever they deviate more than the drift tolerance from the mapped time.
 */

import { Timeline } from "./api.js";
import { Player } from "./player.js";

export const DRIFT_TOLERANCE_S = 0.1;

export interface SyncMember {
  assetId: string;
  offsetS: number;
  player: Player;
}

export interface MemberStatus {
  assetId: string;
  mappedTime: number;
  drift: number;
  outOfRange: boolean;
  corrected: boolean;
}

export class SyncController {
  private readonly members: SyncMember[] = [];
  corrections = 0;

  constructor(readonly master: Player) {}

  addMember(member: SyncMember): void {
    this.members.push(member);
  }

  /** Build members from a dashboard timeline; the caller supplies players. */
  static fromTimeline(
    master: Player,
    timeline: Timeline,
    playerFor: (assetId: string) => Player,
  ): SyncController {
    const controller = new SyncController(master);
    for (const span of timeline.spans) {
      if (span.is_master) continue;
      controller.addMember({
        assetId: span.asset_id,
        offsetS: span.offset_s,
        player: playerFor(span.asset_id),
      });
    }
    return controller;
  }

  memberList(): readonly SyncMember[] {
    return this.members;
  }

  play(): void {
    this.master.play();
    this.tick();
  }

  pause(): void {
    this.master.pause();
    for (const m of this.members) m.player.pause();
  }

  seekMaster(t: number): void {
    this.master.seek(t);
    this.tick();
  }

  mappedTime(member: SyncMember): number {
    return this.master.currentTime - member.offsetS;
  }

  /** One correction pass; call this on a timer (and after seeks). */
  tick(): MemberStatus[] {
    const statuses: MemberStatus[] = [];
    for (const member of this.members) {
      const mapped = this.mappedTime(member);
      const player = member.player;
      const inRange = mapped >= 0 && mapped <= player.duration;
      let corrected = false;
      if (!inRange) {
        player.pause();
      } else {
        const drift = Math.abs(player.currentTime - mapped);
        if (drift > DRIFT_TOLERANCE_S) {
          player.seek(mapped);
          this.corrections += 1;
          corrected = true;
        }
        if (this.master.playing && !player.playing) player.play();
        if (!this.master.playing && player.playing) player.pause();
      }
      statuses.push({
        assetId: member.assetId,
        mappedTime: mapped,
        drift: Math.abs(player.currentTime - mapped),
        outOfRange: !inRange,
        corrected,
      });
    }
    return statuses;
  }
}
