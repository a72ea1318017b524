"""The command line surface, end to end, against generated data.

Writes a small hourly CSV, trains a compact model on it, saves a
checkpoint, re-scores it with eval, inspects a window with analyze, and
runs the bound verifier - all through the same entry point the installed
`dualcast` command uses. Everything lands in a temp directory.

Takes a minute or two of CPU. Run: python3 demos/05_cli_walkthrough.py
"""

import tempfile
from pathlib import Path

from dualcast import cli

workdir = Path(tempfile.mkdtemp(prefix="dualcast-demo-"))
csv_path = workdir / "hourly.csv"
ckpt_path = workdir / "model.ckpt"

SMALL = [
    "--set", "lookback=48", "--set", "horizon=12",
    "--set", "hidden_dim=8", "--set", "heads=2", "--set", "num_layers=2",
    "--set", "max_epochs=4", "--set", "batch_size=16",
]


def run(*argv):
    print(f"$ dualcast {' '.join(argv)}")
    code = cli.main(list(argv))
    print(f"(exit {code})\n")
    return code


run("synth", "--kind", "hourly", "--out", str(csv_path),
    "--set", "standin_rows=900")

run("train", "--out", str(ckpt_path),
    "--set", f"data={csv_path}", *SMALL)

run("eval", "--checkpoint", str(ckpt_path),
    "--set", f"data={csv_path}", *SMALL)

run("analyze", "--set", f"data={csv_path}", "--set", "lookback=48")

run("verify-theorem", "--set", "trials=50", "--set", "synth_sigma=0.1")

print(f"artifacts kept in {workdir}")
