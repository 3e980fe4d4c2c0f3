"""Collects the environment a result was produced in, for bug reports and the
metadata written next to every result table.

Usage: import irssop; irssop.display_debug_info().
"""

from __future__ import annotations

import locale
import platform
import sys
from importlib.metadata import PackageNotFoundError, version as get_version

DEPS = [
    "numpy",
    "scipy",
    "pandas",
    "joblib",
    "packaging",
    "typing_extensions",
]


def _get_python_platform() -> str:
    return platform.platform()


def _get_deps_info() -> dict[str, str]:
    """Installed versions of irssop and its main dependencies."""
    try:
        own = get_version("irssop")
    except PackageNotFoundError:
        own = "unknown"

    deps_info = {"irssop": own}
    for modname in DEPS:
        try:
            deps_info[modname] = get_version(modname)
        except PackageNotFoundError:
            deps_info[modname] = "Not Found"
    return deps_info


def get_env_info() -> dict[str, object]:
    """Python, platform and dependency versions as a JSON-serializable dict."""
    return {
        "python_version": sys.version.replace("\n", " "),
        "python_platform": _get_python_platform(),
        "machine": platform.machine(),
        "encoding": locale.getpreferredencoding(),
        "dependencies": _get_deps_info(),
    }


def display_debug_info() -> None:
    """Print useful debugging information."""
    info = get_env_info()
    print(f"Python version: {info['python_version']}")  # noqa: T201
    print(f"Python platform: {info['python_platform']}")  # noqa: T201
    print("\nDependency Versions:")  # noqa: T201
    print("-" * 20)  # noqa: T201
    for pkg, pkg_version in _get_deps_info().items():
        print(f"{pkg}: {pkg_version or 'Not installed'}")  # noqa: T201
