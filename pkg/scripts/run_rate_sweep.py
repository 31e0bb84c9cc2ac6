"""Run an N-sweep from a JSON config and print the fitted log-log slopes.

    python scripts/run_rate_sweep.py configs/parametric.json --out results/parametric
"""

import argparse
import json

from ipsdrift.experiment import ExperimentConfig, emit, run_sweep


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("config")
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=1)
    args = p.parse_args()

    cfg = ExperimentConfig.load(args.config)
    result = run_sweep(cfg, jobs=args.jobs)
    emit(result, args.out)
    report = {col: result.slope(col) for col in ("e_err", "f_l2_err", "g_l2_err", "t1")}
    report["theory_exponent"] = cfg.theory_exponent()
    report["n_failed"] = result.n_failed
    for col in ("e_err", "t1"):
        ns, meds = result.medians(col)
        report[f"medians_{col}"] = dict(zip(map(int, ns), map(float, meds)))
    print(json.dumps(report, indent=1))


if __name__ == "__main__":
    main()
