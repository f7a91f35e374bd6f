"""dct-train: fine-tune low-rank adapters on a pipeline dataset file."""

import argparse
import json
import logging
import sys

from .config import config_from_file
from .train import train


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s",
                        stream=sys.stderr)
    parser = argparse.ArgumentParser(prog="dct-train", description=__doc__)
    parser.add_argument("--config", required=True, help="JSON TrainerConfig file")
    args = parser.parse_args(argv)

    result = train(config_from_file(args.config))
    print(json.dumps({
        "adapter_dir": str(result.adapter_dir),
        "loss_log": str(result.loss_log),
        "steps": result.steps,
        "epoch_mean_losses": [round(x, 6) for x in result.epoch_mean_losses],
    }, sort_keys=True))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
