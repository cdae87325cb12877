/** Minimal transport abstraction so views work against real media elements
 * in the browser and against fakes in automated runs. */

export interface Player {
  currentTime: number;
  readonly duration: number;
  readonly playing: boolean;
  play(): void;
  pause(): void;
  seek(t: number): void;
}

export class MediaElementPlayer implements Player {
  constructor(private readonly media: HTMLMediaElement) {}

  get currentTime(): number {
    return this.media.currentTime;
  }

  set currentTime(t: number) {
    this.media.currentTime = t;
  }

  get duration(): number {
    const d = this.media.duration;
    return Number.isFinite(d) ? d : 0;
  }

  get playing(): boolean {
    return !this.media.paused;
  }

  play(): void {
    void this.media.play();
  }

  pause(): void {
    this.media.pause();
  }

  seek(t: number): void {
    this.media.currentTime = t;
  }
}

/** Deterministic player for tests and the automated drift run. `rate`
 * models clock skew against the master; `advance` is the simulated tick. */
export class FakePlayer implements Player {
  currentTime = 0;
  playing = false;
  seeks = 0;

  constructor(
    readonly duration: number,
    public rate: number = 1.0,
  ) {}

  play(): void {
    this.playing = true;
  }

  pause(): void {
    this.playing = false;
  }

  seek(t: number): void {
    this.currentTime = t;
    this.seeks += 1;
  }

  advance(dt: number): void {
    if (this.playing) {
      this.currentTime = Math.min(this.duration, this.currentTime + dt * this.rate);
    }
  }
}
