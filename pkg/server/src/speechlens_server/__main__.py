"""Command line entry: load a config file and serve it."""

import argparse

from .app import serve
from .config import ConfigError, load_config


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="speechlens-serve",
        description="Serve a speech-classification checkpoint as a probability oracle",
    )
    parser.add_argument("--config", required=True, help="JSON or YAML server config file")
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config)
    except ConfigError as exc:
        parser.exit(2, f"speechlens-serve: {exc}\n")
    serve(config)


if __name__ == "__main__":
    main()
