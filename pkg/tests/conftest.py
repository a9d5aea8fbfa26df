"""Shared fixtures: a synthetic-corpus workspace driven through the CLI."""

import json
import time
from pathlib import Path

import pytest

from aspectdet import synthetic
from aspectdet.aspects import load_keywords, save_mapping
from aspectdet.cli import main as cli_main
from aspectdet.config import load_config

# desk-scale settings for the planted-topic corpus: subsampling off (every
# word is frequent in a 250-word vocabulary) and a warmup horizon that fits
# a few hundred optimizer steps
SYNTH_CONFIG = """\
min_count = 10
embedding_dim = 64
window = 5
negatives = 5
w2v_epochs = 10
w2v_subsample = 0
num_aspects = 15
smooth_factor = 0.5
temperature = 1.0
batch_size = 50
teacher_epochs = 15
warmup_steps = 200
d_model_constant = 100
clip_norm = 2
top_k = 10
chi_general = 0.8
chi_other = 1.4
student_min_count = 2
student_epochs = 12
seed = 11
"""


def run_cli(*argv) -> int:
    return cli_main([str(a) for a in argv])


def build_workspace(
    root: Path,
    spec: synthetic.SyntheticSpec = synthetic.SyntheticSpec(),
    seed: int = 11,
    through_distill: bool = True,
):
    """Generate data, write a config, and run the pipeline stages via the CLI.

    Returns a dict with the config object, file paths, the topic spec, and
    the scripted mapping location.
    """
    started = time.monotonic()
    root.mkdir(parents=True, exist_ok=True)
    segments, names = synthetic.generate(spec)
    train_path, dev_path, test_path = synthetic.write_split_files(segments, names, root, spec)

    workdir = root / "work"
    config_path = root / "synthetic.cfg"
    config_path.write_text(
        SYNTH_CONFIG
        + f"workdir = {workdir}\n"
        + f"train_file = {train_path}\n"
        + f"dev_file = {dev_path}\n"
        + f"test_file = {test_path}\n"
        + f"seed = {seed}\n",
        encoding="utf-8",
    )
    config = load_config(config_path)

    for stage in ("preprocess", "train-embeddings", "init-aspects", "train-teacher", "keywords"):
        assert run_cli(stage, "--config", config_path) == 0, stage

    # scripted stand-in for the human mapping step
    keyword_lists = load_keywords(config.keywords_path)
    mapping = synthetic.scripted_mapping(
        keyword_lists, synthetic.topic_vocabularies(spec), names
    )
    save_mapping(config.mapping_path, mapping, config_hash=config.config_hash())

    assert run_cli("infer", "--config", config_path, "--split", "dev") == 0
    assert run_cli("evaluate", "--config", config_path, "--split", "dev") == 0
    if through_distill:
        assert run_cli("distill", "--config", config_path) == 0

    return {
        "root": root,
        "config": config,
        "config_path": config_path,
        "spec": spec,
        "names": names,
        "mapping": mapping,
        "metrics": json.loads(config.metrics_path.read_text(encoding="utf-8")),
        "elapsed": time.monotonic() - started,
    }


@pytest.fixture(scope="session")
def synthetic_workspace(tmp_path_factory):
    return build_workspace(tmp_path_factory.mktemp("synth"))
