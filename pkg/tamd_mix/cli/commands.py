import logging
from typing import Optional, Sequence

import click
from rich import print as rprint
from rich.logging import RichHandler

from ..error import ExitCode, TamdError


def configure_logging(quiet: bool = False):
    logging.basicConfig(
        level=logging.WARNING if quiet else logging.INFO,
        format="%(message)s",
        handlers=[RichHandler(show_path=False)],
        force=True,
    )


def _set_quiet(ctx: click.Context, param: click.Parameter, quiet: bool):
    if quiet:
        ctx.meta["tamd.quiet"] = True
        logging.getLogger().setLevel(logging.WARNING)


quiet_option = click.option("--quiet", "-q", is_flag=True, default=False, expose_value=False, callback=_set_quiet,
                            help="Only report warnings and errors")


def is_quiet() -> bool:
    ctx = click.get_current_context(silent=True)
    return bool(ctx and ctx.meta.get("tamd.quiet"))


@click.group
@quiet_option
def commands():
    configure_logging(is_quiet())


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run the CLI and map failures to exit codes: 1 usage, 2 numerical."""
    try:
        result = commands.main(args=list(argv) if argv is not None else None, prog_name="tamd", standalone_mode=False)
    except click.ClickException as e:
        e.show()
        return int(ExitCode.USAGE)
    except click.Abort:
        rprint("[red]Aborted")
        return int(ExitCode.USAGE)
    except TamdError as e:
        rprint(f"[red]{type(e).__name__}: {e}")
        return int(e.exit_code)
    except OSError as e:
        rprint(f"[red]{e}")
        return int(ExitCode.USAGE)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else int(ExitCode.USAGE)
    return result if isinstance(result, int) else int(ExitCode.OK)
