import { describe, expect, it } from "vitest";

import { CLIPBOARD_CAPACITY, Clipboard } from "../src/clipboard.js";

function fakeStorage(): Pick<Storage, "getItem" | "setItem"> & { raw: Map<string, string> } {
  const raw = new Map<string, string>();
  return {
    raw,
    getItem: (k: string) => raw.get(k) ?? null,
    setItem: (k: string, v: string) => {
      raw.set(k, v);
    },
  };
}

describe("clipboard", () => {
  it("holds at most two pins and evicts the oldest with a notice", () => {
    const evicted: string[] = [];
    const clip = new Clipboard(null, { onEvict: (id) => evicted.push(id) });
    expect(clip.pin("a")).toBeNull();
    expect(clip.pin("b")).toBeNull();
    expect(clip.list()).toEqual(["a", "b"]);

    expect(clip.pin("c")).toBe("a");
    expect(clip.list()).toEqual(["b", "c"]);
    expect(clip.list().length).toBe(CLIPBOARD_CAPACITY);
    expect(evicted).toEqual(["a"]);
  });

  it("ignores duplicate pins", () => {
    const clip = new Clipboard();
    clip.pin("a");
    clip.pin("a");
    expect(clip.list()).toEqual(["a"]);
  });

  it("unpins and fires change hooks", () => {
    const snapshots: string[][] = [];
    const clip = new Clipboard(null, { onChange: (pins) => snapshots.push([...pins]) });
    clip.pin("a");
    clip.pin("b");
    clip.unpin("a");
    expect(clip.list()).toEqual(["b"]);
    expect(snapshots).toEqual([["a"], ["a", "b"], ["b"]]);
    clip.unpin("zzz"); // absent: no extra change event
    expect(snapshots.length).toBe(3);
  });

  it("persists through session storage", () => {
    const storage = fakeStorage();
    const first = new Clipboard(storage);
    first.pin("a");
    first.pin("b");
    const second = new Clipboard(storage);
    expect(second.list()).toEqual(["a", "b"]);
  });

  it("starts empty on corrupt session data", () => {
    const storage = fakeStorage();
    storage.setItem("avp.clipboard", "{not json");
    expect(new Clipboard(storage).list()).toEqual([]);
    storage.setItem("avp.clipboard", JSON.stringify({ nope: 1 }));
    expect(new Clipboard(storage).list()).toEqual([]);
  });
});
