import re
from pathlib import Path
from setuptools import setup

VERSIONFILE = "ctcp/_version.py"
NAME = "ctcp"


def _get_attribute(version_file: str, attribute: str) -> str:
    """Retrieve a dunder string attribute from the version file."""
    version_pattern = rf"^{attribute} = ['\"]([^'\"]*)['\"]"
    try:
        with open(version_file, "rt") as file_handle:
            match = re.search(version_pattern, file_handle.read(), re.M)
            if match:
                return match.group(1)
    except FileNotFoundError:
        raise RuntimeError(f"Version file '{version_file}' not found.")
    raise RuntimeError(f"Unable to find {attribute} in '{version_file}'.")


def _get_description() -> str:
    """Read and return the long description from README.md."""
    readme_path = Path(__file__).parent / "README.md"
    with readme_path.open("r", encoding="utf-8") as file_handle:
        return file_handle.read()


setup(
    name=NAME,
    version=_get_attribute(VERSIONFILE, "__version__"),
    author=_get_attribute(VERSIONFILE, "__author__"),
    description=(
        "Network-coded multipath transport over UDP with token based "
        "congestion control, plus a deterministic lossy-network simulator."
    ),
    entry_points={
        "console_scripts": [
            "ctcpcli=ctcp.cli.ctcpcli:main",
        ],
    },
    license="MIT",
    packages=[
        "ctcp",
        "ctcp.cli",
        "ctcp.models",
        "ctcp.scenarios",
    ],
    include_package_data=True,
    package_data={"ctcp.scenarios": ["*.scn"]},
    install_requires=[
        "colorama>=0.4.6,<=0.5.0",
        "numpy>=1.24,<3.0",
        "pint>=0.21,<=0.25",
        "pydantic>=2.5.1,<=3.0.0",
        "python-dotenv>=1.0.1,<=2.0.0",
        "termcolor>=2.0.0,<=3.0.0",
    ],
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Developers",
        "Intended Audience :: Science/Research",
        "Intended Audience :: Telecommunications Industry",
        "License :: OSI Approved :: MIT License",
        "Natural Language :: English",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
        "Topic :: Internet",
        "Topic :: System :: Networking",
        "Topic :: Scientific/Engineering",
    ],
    keywords=[
        "Network Coding",
        "Transport Protocol",
        "Multipath",
        "Congestion Control",
        "UDP",
        "Simulation",
    ],
    python_requires=">=3.9.0",
    long_description_content_type="text/markdown",
    long_description=_get_description(),
)
