"""Subcommand behavior and exit codes, run in-process through main()."""

import os

from jcmlab.cli import EXIT_CONFIG, EXIT_FAIL, EXIT_IO, EXIT_OK, main
from jcmlab.datasets import load_dataset
from jcmlab.experiments import CSV_HEADER

TINY_TRAIN = (
    "method=jcm\nn=8\nsnr_db=6\nseed=2\nsteps=10\nbatch_size=8\n"
    "hidden_enc=8\nhidden_dec=8\nclasses=2\ndim=8\nper_class=10\n"
    "per_class_test=6\nnoise_std=0.08\n"
)


def write(tmp_path, text, name="cli.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


class TestTrain:
    def test_writes_checkpoint_and_trace(self, tmp_path, capsys):
        out = str(tmp_path / "run")
        cfg = write(tmp_path, TINY_TRAIN + f"out={out}\n")
        assert main(["train", "--config", cfg]) == EXIT_OK
        assert os.path.exists(os.path.join(out, "model.ckpt"))
        trace = os.path.join(out, "loss_trace.csv")
        with open(trace) as f:
            lines = f.read().splitlines()
        assert lines[0] == "step,total,ce,mse"
        assert len(lines) == 11
        assert "final loss" in capsys.readouterr().out

    def test_repeat_run_identical_trace_bytes(self, tmp_path):
        out_a = str(tmp_path / "a")
        out_b = str(tmp_path / "b")
        cfg_a = write(tmp_path, TINY_TRAIN + f"out={out_a}\n", "a.cfg")
        cfg_b = write(tmp_path, TINY_TRAIN + f"out={out_b}\n", "b.cfg")
        assert main(["train", "--config", cfg_a]) == EXIT_OK
        assert main(["train", "--config", cfg_b]) == EXIT_OK
        with open(os.path.join(out_a, "loss_trace.csv"), "rb") as f:
            bytes_a = f.read()
        with open(os.path.join(out_b, "loss_trace.csv"), "rb") as f:
            bytes_b = f.read()
        assert bytes_a == bytes_b

    def test_unknown_method_is_config_error(self, tmp_path, capsys):
        cfg = write(tmp_path, "method=morse\n")
        assert main(["train", "--config", cfg]) == EXIT_CONFIG
        assert "config error" in capsys.readouterr().err

    def test_unknown_key_is_config_error(self, tmp_path):
        cfg = write(tmp_path, TINY_TRAIN + "learning_rte=0.1\n")
        assert main(["train", "--config", cfg]) == EXIT_CONFIG

    def test_multi_seed_config_rejected_for_train(self, tmp_path):
        cfg = write(tmp_path, TINY_TRAIN.replace("seed=2", "seeds=1,2"))
        assert main(["train", "--config", cfg]) == EXIT_CONFIG

    def test_unwritable_output_is_io_error(self, tmp_path, capsys):
        cfg = write(tmp_path, TINY_TRAIN + "out=/proc/definitely/not/writable\n")
        assert main(["train", "--config", cfg]) == EXIT_IO
        assert "i/o error" in capsys.readouterr().err


class TestEval:
    def test_eval_trained_checkpoint(self, tmp_path, capsys):
        out = str(tmp_path / "run")
        cfg = write(tmp_path, TINY_TRAIN + f"out={out}\n")
        assert main(["train", "--config", cfg]) == EXIT_OK
        capsys.readouterr()
        eval_cfg = write(
            tmp_path,
            "checkpoint=" + os.path.join(out, "model.ckpt") + "\n"
            "snr_db=6\nseed=2\nclasses=2\ndim=8\nper_class=10\n"
            "per_class_test=6\nnoise_std=0.08\n",
            "eval.cfg",
        )
        assert main(["eval", "--config", eval_cfg]) == EXIT_OK
        out_text = capsys.readouterr().out
        lines = [l for l in out_text.splitlines() if "," in l]
        assert lines[0] == CSV_HEADER
        assert lines[1].startswith("jcm,6,8,2,")

    def test_eval_missing_checkpoint_key(self, tmp_path):
        cfg = write(tmp_path, "snr_db=6\n")
        assert main(["eval", "--config", cfg]) == EXIT_CONFIG

    def test_eval_nonexistent_checkpoint_is_io_error(self, tmp_path):
        cfg = write(tmp_path, f"checkpoint={tmp_path}/none.ckpt\nsnr_db=6\n")
        assert main(["eval", "--config", cfg]) == EXIT_IO

    def test_eval_corrupt_checkpoint_is_failure(self, tmp_path):
        bad = tmp_path / "bad.ckpt"
        bad.write_bytes(b"not a checkpoint")
        cfg = write(tmp_path, f"checkpoint={bad}\nsnr_db=6\n")
        assert main(["eval", "--config", cfg]) == EXIT_FAIL


class TestSweep:
    def test_row_count_header_and_sort(self, tmp_path, capsys):
        out = str(tmp_path / "m.csv")
        cfg = write(
            tmp_path,
            "methods=jcm\nn=8\nsnr_db=10,0\nseeds=4\nsteps=6\nbatch_size=8\n"
            "hidden_enc=8\nhidden_dec=8\nclasses=2\ndim=8\nper_class=10\n"
            f"per_class_test=6\nnoise_std=0.08\nout={out}\n",
        )
        assert main(["sweep", "--config", cfg]) == EXIT_OK
        with open(out) as f:
            lines = f.read().splitlines()
        assert lines[0] == CSV_HEADER
        assert len(lines) == 3
        snrs = [float(l.split(",")[1]) for l in lines[1:]]
        assert snrs == sorted(snrs)

    def test_repeat_sweep_byte_identical(self, tmp_path):
        out = str(tmp_path / "m.csv")
        cache = str(tmp_path / "cache")
        cfg = write(
            tmp_path,
            "methods=jcm\nn=8\nsnr_db=6\nseeds=0\nsteps=6\nbatch_size=8\n"
            "hidden_enc=8\nhidden_dec=8\nclasses=2\ndim=8\nper_class=10\n"
            f"per_class_test=6\nnoise_std=0.08\nout={out}\ncache_dir={cache}\n",
        )
        assert main(["sweep", "--config", cfg]) == EXIT_OK
        with open(out, "rb") as f:
            first = f.read()
        assert main(["sweep", "--config", cfg]) == EXIT_OK
        with open(out, "rb") as f:
            second = f.read()
        assert first == second

    def test_out_flag_overrides_config(self, tmp_path):
        out_cfg = str(tmp_path / "from_config.csv")
        out_flag = str(tmp_path / "from_flag.csv")
        cfg = write(
            tmp_path,
            "methods=jcm\nn=8\nsnr_db=6\nseeds=0\nsteps=4\nbatch_size=8\n"
            "hidden_enc=8\nhidden_dec=8\nclasses=2\ndim=8\nper_class=10\n"
            f"per_class_test=6\nnoise_std=0.08\nout={out_cfg}\n",
        )
        assert main(["sweep", "--config", cfg, "--out", out_flag]) == EXIT_OK
        assert os.path.exists(out_flag)
        assert not os.path.exists(out_cfg)


class TestVerify:
    def test_fast_suites_pass(self, tmp_path, capsys):
        assert main(["verify", "normalization"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "[PASS] normalization" in out
        assert "suites passed" in out

    def test_unknown_suite_is_config_error(self):
        assert main(["verify", "nonsense"]) == EXIT_CONFIG

    def test_bounds_prints_slack_table(self, capsys):
        assert main(["verify", "bounds"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "min_slack" in out
        assert "min slack over all draws" in out


class TestGenData:
    def test_writes_loadable_manifests(self, tmp_path, capsys):
        out = str(tmp_path / "data")
        cfg = write(tmp_path, "classes=3\ndim=16\nper_class=5\nper_class_test=2\n"
                              f"noise_std=0.05\ndata_seed=1\nout={out}\n")
        assert main(["gen-data", "--config", cfg]) == EXIT_OK
        train = load_dataset(os.path.join(out, "train.manifest"))
        test = load_dataset(os.path.join(out, "test.manifest"))
        assert train.count == 15
        assert test.count == 6
        assert train.num_classes == 3

    def test_manifest_config_rejected(self, tmp_path):
        cfg = write(tmp_path, "data=manifest\ntrain_manifest=a\ntest_manifest=b\n")
        assert main(["gen-data", "--config", cfg]) == EXIT_CONFIG


class TestArgumentErrors:
    def test_unknown_subcommand(self, capsys):
        assert main(["transmogrify"]) == EXIT_CONFIG
        capsys.readouterr()

    def test_missing_config_flag(self, capsys):
        assert main(["train"]) == EXIT_CONFIG
        capsys.readouterr()

    def test_missing_config_file(self, tmp_path):
        assert main(["train", "--config", str(tmp_path / "ghost.cfg")]) == EXIT_CONFIG
