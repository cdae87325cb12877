/** Comparison clipboard: up to two pinned assets, session-local only. */

export const CLIPBOARD_CAPACITY = 2;

const STORAGE_KEY = "avp.clipboard";

export interface ClipboardHooks {
  /** Called after any change with the current pins, oldest first. */
  onChange?: (pins: readonly string[]) => void;
  /** Called when pinning a third asset pushes the oldest one out. */
  onEvict?: (evicted: string) => void;
}

export class Clipboard {
  private pins: string[] = [];

  constructor(
    private readonly storage: Pick<Storage, "getItem" | "setItem"> | null = null,
    private readonly hooks: ClipboardHooks = {},
  ) {
    const raw = storage?.getItem(STORAGE_KEY);
    if (raw) {
      try {
        const parsed: unknown = JSON.parse(raw);
        if (Array.isArray(parsed)) {
          this.pins = parsed.filter((p): p is string => typeof p === "string");
          this.pins = this.pins.slice(-CLIPBOARD_CAPACITY);
        }
      } catch {
        // stale or corrupt session entry; start empty
      }
    }
  }

  list(): readonly string[] {
    return this.pins;
  }

  has(assetId: string): boolean {
    return this.pins.includes(assetId);
  }

  /** Pin an asset; returns the evicted asset id if capacity forced one out. */
  pin(assetId: string): string | null {
    if (this.has(assetId)) return null;
    this.pins.push(assetId);
    let evicted: string | null = null;
    if (this.pins.length > CLIPBOARD_CAPACITY) {
      evicted = this.pins.shift() ?? null;
      if (evicted !== null) this.hooks.onEvict?.(evicted);
    }
    this.persist();
    this.hooks.onChange?.(this.pins);
    return evicted;
  }

  unpin(assetId: string): void {
    const before = this.pins.length;
    this.pins = this.pins.filter((p) => p !== assetId);
    if (this.pins.length !== before) {
      this.persist();
      this.hooks.onChange?.(this.pins);
    }
  }

  private persist(): void {
    this.storage?.setItem(STORAGE_KEY, JSON.stringify(this.pins));
  }
}
