"""Command-line entry point: ``reluam {train,phase,losscurve,twohidden}``."""

from __future__ import annotations

import sys
from typing import Optional, Sequence

from reluam.harness.config import ConfigError, parse_config
from reluam.harness.io import LOSS_HEADER, PHASE_HEADER, format_value, write_csv, write_metadata
from reluam.harness.runner import ExperimentResult, run_experiment


def _print_train(result: ExperimentResult, out=None) -> None:
    out = out or sys.stdout
    trial = result.trials[0]
    print("iteration,residual,param_dist", file=out)
    for t in trial.trace:
        print(f"{t.iteration},{format_value(t.residual)},{format_value(t.param_dist)}", file=out)
    status = "recovered" if trial.success else ("diverged" if trial.diverged else "not recovered")
    print(
        f"# {status}: relative error {trial.relative_error:.3e} after {trial.iterations_used} "
        f"iterations ({trial.wall_time:.2f} s)",
        file=out,
    )


def _print_rows(result: ExperimentResult, out=None) -> None:
    out = out or sys.stdout
    header = LOSS_HEADER if result.schema == "loss" else PHASE_HEADER
    print(",".join(header), file=out)
    for row in result.rows():
        print(",".join(format_value(getattr(row, h)) for h in header), file=out)


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        parsed = parse_config(argv)
    except ConfigError as exc:
        print(f"reluam: error: {exc}", file=sys.stderr)
        return 2
    spec = parsed.spec
    result = run_experiment(spec)
    if spec.command == "train":
        _print_train(result)
    elif parsed.out is None:
        _print_rows(result)
    if parsed.out is not None:
        try:
            path = write_csv(result, parsed.out)
            write_metadata(path, result, parsed.overrides, parsed.config_file, spec.jobs)
        except OSError as exc:
            print(f"reluam: error: {exc}", file=sys.stderr)
            return 1
        print(f"wrote {path}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
