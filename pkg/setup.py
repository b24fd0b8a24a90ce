from setuptools import setup, find_packages
import os

# Read README for long description
def read_readme():
    readme_path = "README.md"
    if os.path.exists(readme_path):
        with open(readme_path, "r", encoding="utf-8") as fh:
            return fh.read()
    return "Anisotropic mesh adaptation with Hessian-based metric tensors"

# Keep in sync with pyproject.toml
def get_requirements():
    return [
        "numpy>=1.24",
        "scipy>=1.10",
        "rich>=13.7.0",
        "click>=8.1.0",
        "pydantic>=2.5.0",
        "pydantic-settings>=2.1.0",
        "psutil>=5.9.0",
    ]

setup(
    name="anisomesh",
    version="1.0.0",
    description="Anisotropic mesh adaptation with Hessian-based metric tensors",
    long_description=read_readme(),
    long_description_content_type="text/markdown",
    packages=find_packages(include=["anisomesh", "anisomesh.*"]),
    python_requires=">=3.9",
    install_requires=get_requirements(),
    extras_require={
        "dev": [
            "pytest>=7.4.0",
            "pytest-cov>=4.1.0",
            "black>=23.12.0",
            "ruff>=0.1.0",
            "mypy>=1.8.0",
        ],
    },
    entry_points={
        "console_scripts": [
            "anisomesh=anisomesh.main:main",
        ],
    },
    include_package_data=True,
    zip_safe=False,
)
