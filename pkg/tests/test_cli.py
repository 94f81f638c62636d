import json
import shutil

import pytest

from sqlgrpo.cli import content_hash, main
from sqlgrpo.config import REFERENCE_ALTERNATES, ConfigError, RunConfig, override


@pytest.fixture(scope="module")
def wd(tmp_path_factory, work_root, train_ds):
    d = tmp_path_factory.mktemp("cli")
    shutil.copytree(work_root / "corpus", d / "data")
    return d


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_unknown_verb_exits_one_with_usage(capsys):
    code, _, err = run(capsys, "frobnicate")
    assert code == 1
    assert "usage:" in err and "train-grpo" in err


def test_missing_verb(capsys):
    assert run(capsys)[0] == 1


def test_bad_flag_prints_verb_table(capsys):
    code, _, err = run(capsys, "sft", "--nope")
    assert code == 1
    assert "usage: sqlgrpo sft" in err and "--epochs" in err


def test_score_gold_against_itself(capsys, wd):
    code, out, _ = run(capsys, "score", "--workdir", str(wd), "--schema", "data/schemas/movies.schema.json",
                       "--db", "data/schemas/movies.state.json", "--gold", "SELECT name FROM actor",
                       "--candidate", "SELECT name FROM actor")
    assert code == 0
    bundle = json.loads(out)
    assert bundle["r_exec"] == 1.0 and bundle["r_syntax"] == 1.0


def test_score_rejects_bad_gold(capsys, wd):
    code, _, err = run(capsys, "score", "--workdir", str(wd), "--schema", "data/schemas/movies.schema.json",
                       "--db", "data/schemas/movies.state.json", "--gold", "SELECT FROM", "--candidate", "x")
    assert code == 1 and "gold SQL" in err


def test_mkdata_manifest_and_hash(capsys, tmp_path, wd):
    code, out, _ = run(capsys, "mkdata", "--workdir", str(tmp_path), "--out", "d")
    assert code == 0 and json.loads(out)["total"] == 840
    m = json.loads((tmp_path / "d" / "manifest.json").read_text())
    assert m["config"]["data"]["seed"] == 1
    assert content_hash(tmp_path / "d") == content_hash(wd / "data")


def test_content_hash_is_git_blob(tmp_path):
    (tmp_path / "f").write_bytes(b"hello\n")
    assert content_hash(tmp_path / "f") == "ce013625030ba8dba906f756967f9e9ca394464a"


def test_eval_gold_writes_reports(capsys, wd):
    code, out, _ = run(capsys, "eval", "--workdir", str(wd), "--gold", "--out", "ev")
    assert code == 0 and json.loads(out)["exec_acc"] == 100.0
    assert (wd / "ev" / "eval.json").exists()
    assert "Average" in (wd / "ev" / "eval.md").read_text()
    code, out, _ = run(capsys, "report", "--workdir", str(wd), "ev", "ev/eval.json")
    assert code == 0 and "Δ SemAcc" in out


def test_eval_needs_policy(capsys, wd):
    assert run(capsys, "eval", "--workdir", str(wd))[0] == 1


def test_missing_data_is_validation_error(capsys, tmp_path):
    assert run(capsys, "sft", "--workdir", str(tmp_path))[0] == 1


@pytest.fixture(scope="module")
def tiny_sft(wd):
    (wd / "tiny.toml").write_text(
        "[policy.model]\nn_layers = 1\nd_model = 16\nn_heads = 2\nd_ff = 32\ncontext = 400\n"
        "[policy.sft]\nepochs = 1\nbatch_size = 64\n"
        "[grpo]\nsteps = 2\nbatch_prompts = 1\ngroup_size = 2\n"
        "[encoder.model]\nbuckets = 512\nd_enc = 16\nhidden = 16\nd_out = 16\n"
        "[encoder.train]\nepochs = 1\nbatch_size = 256\n",
        encoding="utf-8")
    assert main(["sft", "--workdir", str(wd), "--config", "tiny.toml", "--out", "sft"]) == 0
    return wd


def test_no_contrastive_manifest(capsys, tiny_sft):
    wd = tiny_sft
    code, _, _ = run(capsys, "train-grpo", "--workdir", str(wd), "--config", "tiny.toml", "--no-contrastive",
                     "--encoder", "does-not-exist", "--out", "nc", "--eval-every", "0")
    assert code == 0
    m = json.loads((wd / "nc" / "manifest.json").read_text())
    assert m["config"]["rewards"]["w_sem"] == 0.0
    assert m["encoder_path"] is None and "encoder" not in m["inputs"]
    assert len((wd / "nc" / "trainlog.jsonl").read_text().splitlines()) == 2


def test_contrastive_run_and_replay(capsys, tiny_sft):
    wd = tiny_sft
    assert run(capsys, "train-encoder", "--workdir", str(wd), "--config", "tiny.toml", "--out", "enc")[0] == 0
    code, out, _ = run(capsys, "embed", "--workdir", str(wd), "--encoder", "enc", "--text", "hello")
    assert code == 0 and len(json.loads(out)[0]["vector"]) == 16
    code, _, _ = run(capsys, "train-grpo", "--workdir", str(wd), "--config", "tiny.toml", "--encoder", "enc",
                     "--out", "c", "--sem-mode", "sql", "--eval-every", "1")
    assert code == 0
    m = json.loads((wd / "c" / "manifest.json").read_text())
    assert m["config"]["rewards"]["w_sem"] == 0.2 and m["inputs"]["encoder"]["sha1"]
    assert "1" in m["metrics"]["snapshots"]
    code, out, _ = run(capsys, "replay", "--workdir", str(wd), "c/manifest.json", "--out", "c2")
    assert code == 0
    res = json.loads(out[out.index("{\n \"identical\""):])
    assert res["identical"] and res["inputs_identical"]
    assert (wd / "c" / "trainlog.jsonl").read_bytes() == (wd / "c2" / "trainlog.jsonl").read_bytes()


# ---------------------------------------------------------------- config

def test_defaults_materialised():
    d = RunConfig().to_dict()
    assert d["grpo"]["group_size"] == 8 and d["grpo"]["beta"] == 0.02
    assert d["rewards"] == {"w_exec": 1.0, "w_syntax": 0.5, "w_schema": 0.5, "w_sem": 0.2}
    assert d["eval"]["k_states"] == 5
    assert RunConfig.from_dict(d).to_dict() == d


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"grpo": {"gruop_size": 4}})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"optimizer": {}})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"policy": {"d_model": 4}})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"grpo": {"group_size": 1}})


def test_override_and_alternates():
    cfg = override(RunConfig(), grpo__seed=4, rewards__w_sem=0.0, grpo__steps=None)
    assert cfg.grpo.seed == 4 and cfg.rewards.w_sem == 0.0 and cfg.grpo.steps == RunConfig().grpo.steps
    alt = RunConfig.from_dict({"grpo": REFERENCE_ALTERNATES["grpo"], "rewards": REFERENCE_ALTERNATES["rewards"],
                               "encoder": {"train": REFERENCE_ALTERNATES["encoder.train"]}})
    assert alt.grpo.lr == 5e-6 and alt.grpo.batch_prompts == 16 and alt.encoder_train.batch_size == 96


def test_load_toml(tmp_path):
    (tmp_path / "c.toml").write_text("[rewards]\nw_sem = 0.0\n[encoder.model]\nngram_sizes = [2, 3]\n")
    cfg = RunConfig.load(tmp_path / "c.toml")
    assert cfg.rewards.w_sem == 0.0 and cfg.encoder_model.ngram_sizes == (2, 3)
    (tmp_path / "bad.toml").write_text("[rewards\n")
    with pytest.raises(ConfigError):
        RunConfig.load(tmp_path / "bad.toml")

