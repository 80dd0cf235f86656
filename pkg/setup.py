from setuptools import find_packages, setup

setup(
    name="slickwatch",
    version="0.1.0",
    packages=find_packages(include=["src", "src.*"]),
    install_requires=[
        "numpy",
        "scipy",
        "pandas",
        "matplotlib",
        "Pillow",
        "tqdm",
        "loguru",
        "tomli",
        "tomlkit",
        "packaging",
        "python-dotenv",
    ],
    extras_require={"test": ["pytest", "hypothesis", "networkx"]},
    entry_points={"console_scripts": ["slickwatch=src.plugins.pipeline.cli:run"]},
)
