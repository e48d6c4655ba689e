import logging

import click

import corrtw
from corrtw.commands import create_corrtw_command


@click.group(help="Sample correlation matrices and their Tracy-Widom edge statistics.")
@click.option("-v", "--verbose", count=True, help="Log INFO, or DEBUG when repeated")
@click.option("-q", "--quiet", is_flag=True, help="Log errors only")
@click.version_option(version=corrtw.__version__)
def cli(verbose: int, quiet: bool) -> None:
    if quiet:
        level = logging.ERROR
    elif verbose >= 2:
        level = logging.DEBUG
    elif verbose == 1:
        level = logging.INFO
    else:
        level = logging.WARNING
    logging.basicConfig(
        level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s"
    )


create_corrtw_command(cli)


def run() -> None:
    cli()
