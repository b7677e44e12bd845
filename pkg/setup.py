from setuptools import setup, find_packages

setup(
    name="pnda-rotation",
    version="0.1.0",
    packages=find_packages(include=["app", "app.*"]),
    install_requires=[
        "numpy>=1.24.0",
        "pandas>=2.0.0",
        "pydantic>=2.4.0",
        "PyYAML>=6.0",
        "scikit-learn>=1.3.0",
        "torch>=2.1.0",
        "torchvision>=0.16.0",
        "plotly>=5.18.0",
        "prometheus-client>=0.19.0",
    ],
    extras_require={
        "dev": [
            "pytest>=7.4.0",
            "pytest-cov>=4.1.0",
            "pytest-mock>=3.11.1",
            "pytest-env>=1.0.1",
            "coverage>=7.3.0",
            "black>=23.7.0",
            "isort>=5.12.0",
            "mypy>=1.5.1",
            "pylint>=2.17.5",
            "pre-commit>=3.3.3",
        ]
    },
    entry_points={
        "console_scripts": [
            "pnda=app.cli.main:main",
        ],
    },
    python_requires=">=3.9",
)
