"""Mini SNR sweep: the learned discrete system against all three baselines.

Every method gets the same channel-use budget (analog sends n reals, the
8-bit quantizer spends 8 symbols per real, the other two send n binary
symbols).  Each point trains its own model at its evaluation SNR.

Run: python3 demos/baseline_comparison.py   (about a minute)
"""

import tempfile
import time
from pathlib import Path

from jcmlab.experiments import format_metrics_csv, load_experiment_config, run_sweep

CONFIG = """\
methods=jcm,analog,uniform8,nn1bit
n=32
snr_db=-4,4,12
seeds=0
steps=500
batch_size=64
hidden_enc=48
hidden_dec=48
classes=4
dim=32
per_class=400
per_class_test=100
noise_std=0.1
data_seed=0
"""


def main():
    with tempfile.TemporaryDirectory() as tmp:
        cfg_path = Path(tmp) / "demo.cfg"
        cfg_path.write_text(CONFIG)
        cfg = load_experiment_config(str(cfg_path))

        points = len(cfg.methods) * len(cfg.snrs) * len(cfg.seeds)
        print(f"training {points} points (4 methods x 3 SNRs), n = {cfg.n} ...")
        start = time.monotonic()
        records = run_sweep(cfg)
        print(f"done in {time.monotonic() - start:.0f}s")

    print()
    print(format_metrics_csv(records))
    print("reading the table:")
    print("  - the binary learned system (jcm) holds its accuracy as SNR drops;")
    print("  - uniform8 collapses at low SNR because bit flips shred its 8-bit codes;")
    print("  - analog transmits unquantized reals, an upper-bound reference;")
    print("  - nn1bit is the learned 1-bit quantizer trained straight-through.")


if __name__ == "__main__":
    main()
