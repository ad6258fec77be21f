"""Run the CLI on every JSON config in scripts/configs (or the ones given).

    python3 scripts/run_configs.py [--out results] [configs/cat_state.json ...]
"""

import argparse
from pathlib import Path

from backaction import cli

HERE = Path(__file__).resolve().parent


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("configs", nargs="*", type=Path)
    ap.add_argument("--out", type=Path, default=Path("results"))
    args = ap.parse_args()
    configs = args.configs or sorted((HERE / "configs").glob("*.json"))
    failed = 0
    for cfg in configs:
        code = cli.main(["--config", str(cfg), "--out", str(args.out)])
        print(f"{cfg.name}: exit {code}")
        failed += code != 0
    raise SystemExit(1 if failed else 0)


if __name__ == "__main__":
    main()
