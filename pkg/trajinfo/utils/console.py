"""控制台输出（rich）

约定：
- 进度与状态信息统一走 `log`，静默模式下不输出。
- 告警统一走 `warn`，任何模式下都会输出。
"""

from rich.console import Console
from rich.progress import (
    BarColumn,
    Progress,
    SpinnerColumn,
    TextColumn,
    TimeElapsedColumn,
    TimeRemainingColumn,
)

console = Console(stderr=True, highlight=False)

_state = {"verbose": True}


def set_verbose(flag: bool) -> None:
    """Enable or silence status output (warnings are always shown)"""
    _state["verbose"] = bool(flag)


def is_verbose() -> bool:
    return _state["verbose"]


def log(message: str) -> None:
    if _state["verbose"]:
        console.print(message)


def warn(message: str) -> None:
    console.print(f"[yellow]Warning:[/yellow] {message}")


def make_progress() -> Progress:
    """Transient progress bar; disabled in quiet mode"""
    columns = [
        SpinnerColumn(),
        TextColumn("[progress.description]{task.description}"),
        BarColumn(),
        TextColumn("{task.completed}/{task.total}"),
        TimeElapsedColumn(),
        TimeRemainingColumn(),
    ]
    return Progress(*columns, console=console, transient=True, disable=not _state["verbose"])
