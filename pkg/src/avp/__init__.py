"""Multi-source audio-visual evidence platform.

Aligns recordings of a shared scene by landmark audio fingerprinting,
finds acoustically similar material with segment-level timbre features,
and indexes detector output as schema-checked JSON artifacts behind a
small HTTP service.
"""

__version__ = "0.1.0"
