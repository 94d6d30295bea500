"""Full-scale training + evaluation used by the headline acceptance check.

Run standalone to inspect the numbers:
    python3 scripts/headline_run.py /tmp/headline
"""
import json
import sys
import time
from pathlib import Path

from slicesim.config import SimConfig
from slicesim.engine import evaluate, train

TRAIN_SEED = 0
EVAL_SEEDS = (100, 101, 102)


def run(out_dir):
    out = Path(out_dir)
    cfg = SimConfig()
    cfg.validate()
    t0 = time.time()
    ckpt = train(cfg, out / "train", seed=TRAIN_SEED)
    t_train = time.time() - t0

    results = {"train_seconds": t_train, "drl": [], "baseline": []}
    for seed in EVAL_SEEDS:
        s_drl = evaluate(cfg, out / f"drl_{seed}", seed, "drl", checkpoint=ckpt)
        s_base = evaluate(cfg, out / f"baseline_{seed}", seed, "baseline")
        for kind, s in (("drl", s_drl), ("baseline", s_base)):
            results[kind].append({
                "seed": seed,
                "revenue": s["mean_revenue"],
                "safety_ratio": s["slices"]["safety"]["delivered_ratio"],
                "autonomous_ratio": s["slices"]["autonomous"]["delivered_ratio"],
            })
    results["total_seconds"] = time.time() - t0
    (out / "headline.json").write_text(json.dumps(results, indent=2) + "\n")
    return results


if __name__ == "__main__":
    res = run(sys.argv[1] if len(sys.argv) > 1 else "/tmp/headline")
    print(json.dumps(res, indent=2))
