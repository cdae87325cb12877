#!/usr/bin/env python3
"""Generate a small synthetic demo corpus and, optionally, a ready-to-serve root.

Writes a handful of WAV files: three unrelated street scenes, two staggered
noisy copies of the first one (phone recordings of the same incident), a
click train, a steady siren tone and an HVAC-like noise bed. With --root the
clips are also ingested, fingerprinted and quick-scanned so `avp serve` has
something to show immediately.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from avp import quickdetect, synth  # noqa: E402


def build_clips(seed: int) -> dict[str, tuple[np.ndarray, dict]]:
    rng = np.random.default_rng(seed)
    plaza = synth.make_scene(45.0, rng)
    clips = {
        "plaza_cctv": (plaza, {"site": "plaza", "source": "cctv"}),
        "plaza_phone1": (
            synth.add_noise_snr(synth.trim_start(plaza, 2.0), 20.0, rng),
            {"site": "plaza", "source": "phone"},
        ),
        "plaza_phone2": (
            synth.add_noise_snr(synth.trim_start(plaza, 5.0), 12.0, rng),
            {"site": "plaza", "source": "phone"},
        ),
        "market_cam": (synth.make_scene(30.0, rng), {"site": "market", "source": "cctv"}),
        "station_cam": (synth.make_scene(25.0, rng), {"site": "station", "source": "cctv"}),
        "shots": (
            synth.click_train(15.0, [2.0, 2.4, 2.8, 9.5]),
            {"site": "plaza", "source": "phone"},
        ),
        "siren": (
            np.concatenate([np.zeros(44100), synth.tone(950.0, 8.0, amp=0.4), np.zeros(44100)]),
            {"site": "market", "source": "phone"},
        ),
        "hvac": (rng.normal(0.0, 0.05, 44100 * 20), {"site": "station", "source": "cctv"}),
    }
    return clips


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="demo_media", help="directory for the WAV files")
    ap.add_argument("--root", default=None, help="also ingest everything into this corpus root")
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    clips = build_clips(args.seed)
    for name, (samples, _) in clips.items():
        synth.write_wav(out / f"{name}.wav", samples)
    print(f"wrote {len(clips)} clips to {out}/")

    if args.root is None:
        return

    from avp.service import ApiConfig, Platform  # noqa: E402

    platform = Platform(ApiConfig(corpus_root=args.root))
    for name, (_, metadata) in clips.items():
        asset = platform.ingest_and_index(out / f"{name}.wav", dict(metadata, name=name))
        pcm = platform.catalog.get_audio(asset.asset_id)
        n_events = 0
        for doc in (quickdetect.detect_impulses(pcm), quickdetect.detect_sustained(pcm)):
            path = quickdetect.write_artifact(doc, platform.artifact_dir)
            platform.events.add_artifact(doc, source=path.name)
            n_events += len(doc["events"])
        print(f"  {asset.asset_id}  {name:<14} {n_events} quick events")
    print(f"corpus ready at {args.root}")
    print(f'serve it with: avp serve --config <(echo \'{{"corpus_root": "{args.root}"}}\')')


if __name__ == "__main__":
    main()
