#!/usr/bin/env python3
"""
trajthermo Setup Script
Installs the package and the `trajthermo` console script.
"""

from pathlib import Path

from setuptools import find_packages, setup

ROOT = Path(__file__).parent


def read_requirements() -> list:
    """Runtime requirements: everything above the development block."""
    requirements = []
    for line in (ROOT / "requirements.txt").read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line.startswith("# Development"):
            break
        if line and not line.startswith("#"):
            requirements.append(line)
    return requirements


def read_version() -> str:
    for line in (ROOT / "trajthermo" / "__init__.py").read_text(encoding="utf-8").splitlines():
        if line.startswith("__version__"):
            return line.split("=")[1].strip().strip('"')
    raise RuntimeError("__version__ not found")


setup(
    name="trajthermo",
    version=read_version(),
    description="Trajectory-based heat, work and entropy production for open quantum systems",
    long_description=(ROOT / "docs" / "QUICK_START.md").read_text(encoding="utf-8"),
    long_description_content_type="text/markdown",
    packages=find_packages(exclude=("tests", "tests.*", "examples", "examples.*")),
    python_requires=">=3.9",
    install_requires=read_requirements(),
    extras_require={"dev": ["pytest==7.4.3", "pytest-cov==4.1.0", "black==23.11.0", "isort==5.12.0", "flake8==6.1.0", "mypy==1.7.1"]},
    entry_points={"console_scripts": ["trajthermo=trajthermo.cli:main"]},
    classifiers=[
        "Programming Language :: Python :: 3",
        "Topic :: Scientific/Engineering :: Physics",
        "Intended Audience :: Science/Research",
    ],
)
