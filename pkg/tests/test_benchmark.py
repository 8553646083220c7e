import runpy
import sys
from pathlib import Path

BENCH = Path(__file__).resolve().parent.parent / "benchmarks" / "bench_kernels.py"


def test_benchmark_smoke(capsys, monkeypatch):
    monkeypatch.setattr(sys, "argv", [str(BENCH), "--sizes", "20", "--repeat", "1"])
    runpy.run_path(str(BENCH), run_name="__main__")
    out = capsys.readouterr().out
    assert "linkage_merges" in out and "pam_swap_deltas" in out
