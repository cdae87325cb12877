import numpy as np
import pytest

from avp import synth
from avp.service import ApiConfig, Platform


@pytest.fixture
def platform_factory(tmp_path):
    """Build a Platform over a temp corpus from named sample arrays."""

    def build(clips: dict, metadata: dict | None = None):
        media = tmp_path / "media_in"
        media.mkdir(exist_ok=True)
        platform = Platform(ApiConfig(corpus_root=str(tmp_path / "corpus")))
        ids = {}
        for name, samples in clips.items():
            path = media / f"{name}.wav"
            synth.write_wav(path, samples)
            meta = (metadata or {}).get(name, {})
            ids[name] = platform.ingest_and_index(path, meta).asset_id
        return platform, ids

    return build


@pytest.fixture(scope="session")
def base_scene():
    """One 30 s scene reused by sync-flavored tests (deterministic)."""
    return synth.make_scene(30.0, np.random.default_rng(1234))
