from setuptools import find_packages, setup

setup(
    name="renorm_engine",
    version="0.1.0",
    packages=find_packages(),
)
