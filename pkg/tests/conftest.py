from pathlib import Path

import numpy as np
import pytest

from cdpauth import Dir, File, ChannelParams, Codebook, Template, generate_template, print_code, train_codebook
from cdpauth.codebook import CodebookEntry


def pytest_configure(config: pytest.Config) -> None:
    config.addinivalue_line("markers", "slow: full-size acceptance checks that take minutes rather than seconds")


@pytest.fixture()
def temp_root(tmp_path: Path) -> Dir:
    return Dir(tmp_path)


@pytest.fixture()
def temp_dir(temp_root: Dir) -> Dir:
    return temp_root.new_dir('testing')


@pytest.fixture()
def temp_file(temp_root: Dir) -> File:
    return temp_root.new_file('testing', 'json').write({"testing": 1})


@pytest.fixture()
def output_root(temp_root: Dir, monkeypatch: pytest.MonkeyPatch) -> Dir:
    monkeypatch.setenv(Dir.ENV_VAR, str(temp_root.new_dir('runs')))
    return temp_root.new_dir('runs')


@pytest.fixture()
def template() -> Template:
    return generate_template(32, 0.5, seed=3)


@pytest.fixture()
def preset_a() -> ChannelParams:
    return ChannelParams.preset("A", seed=11)


@pytest.fixture()
def training_pairs(preset_a: ChannelParams) -> list:
    templates = [generate_template(32, 0.5, seed=100 + index) for index in range(6)]
    return [(t, print_code(t, preset_a, index=index)) for index, t in enumerate(templates)]


@pytest.fixture()
def codebook(training_pairs: list) -> Codebook:
    return train_codebook(training_pairs, h=3)


@pytest.fixture()
def stub_codebook() -> Codebook:
    """A codebook whose every 3×3 code has P = code / 511 and P_b = (code % 7) / 10, with no unseen neighbourhoods."""
    entries = {code: CodebookEntry(count=511, p_sum=code, pb_sum=(code % 7) * 511 // 10) for code in range(512)}
    return Codebook(h=3, k=3, estimator_id="otsu-mv", border_mode="interior", entries=entries)


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


unnecessary = pytest.mark.skip(reason="unnecessary")
