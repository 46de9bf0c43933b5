import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import synth  # noqa: E402
from psycodec.psycho import MaskingParams, build_masking  # noqa: E402


@pytest.fixture(scope="session")
def dense_fixture():
    """Tonal-plus-bed signal with its masking model (worked-example regime)."""
    x = synth.dense_tonal()
    model = build_masking(x, synth.FS, MaskingParams())
    return x, model


@pytest.fixture(scope="session")
def sparse_fixture():
    """Staggered decaying chord with its masking model."""
    x = synth.chord_arpeggio()
    model = build_masking(x, synth.FS, MaskingParams())
    return x, model


@pytest.fixture(scope="session")
def corpus(tmp_path_factory):
    """The bundled five-item 30 s corpus, synthesized once per session."""
    items = {}
    for kind in synth.CORPUS_KINDS:
        items[kind] = synth.corpus_item(kind)
    return items


@pytest.fixture(scope="session")
def corpus_models(corpus):
    return {kind: build_masking(x, synth.FS, MaskingParams())
            for kind, x in corpus.items()}


@pytest.fixture(scope="session")
def short_corpus_dir(tmp_path_factory):
    """Small WAV corpus on disk for calibration and CLI tests."""
    from psycodec.container import write_wav

    d = tmp_path_factory.mktemp("corpus")
    rng = np.random.default_rng(3)
    fs = 8000
    t = np.arange(fs // 2) / fs
    for i, f0 in enumerate((330.0, 523.0)):
        x = 6000.0 * np.sin(2 * np.pi * f0 * t) * np.hanning(t.size)
        write_wav(x, fs, d / f"tone{i}.wav")
    return d
