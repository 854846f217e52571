"""Sidecar command line: serve a model or export a bundle."""

from __future__ import annotations

import click

from .export import export_bundle
from .model import SidecarConfig, SplitClassifier
from .server import serve_predictions


@click.group()
def cli():
    """Adapters between real text classifiers and the visualization toolkit."""


@cli.command("serve")
@click.option("--model", required=True, help="Model hub id or local path.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8060, show_default=True)
@click.option("--batch-size", type=int, default=16, show_default=True)
def cmd_serve(model, host, port, batch_size):
    """Expose the model's classification head over the wire protocol."""
    serve_predictions(SidecarConfig(model=model, host=host, port=port,
                                    batch_size=batch_size))


@cli.command("export")
@click.option("--input", "corpus_path", required=True,
              help="JSON Lines corpus with a 'text' field per line.")
@click.option("--model", required=True, help="Model hub id or local path.")
@click.option("--out-dir", required=True)
@click.option("--name", default="bundle", show_default=True)
@click.option("--batch-size", type=int, default=16, show_default=True)
def cmd_export(corpus_path, model, out_dir, name, batch_size):
    """Encode a corpus into a loadable embedding bundle."""
    classifier = SplitClassifier(model, batch_size=batch_size)
    manifest = export_bundle(corpus_path, classifier, out_dir, name=name)
    click.echo(manifest)


def main() -> None:
    cli()


if __name__ == "__main__":
    main()
