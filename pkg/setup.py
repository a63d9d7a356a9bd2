from os import path
from setuptools import setup, find_packages


here = path.abspath(path.dirname(__file__))


def read_requirements(filename):
    with open(path.join(here, filename)) as requirements_file:
        # Parse requirements.txt, ignoring any commented-out lines.
        requirements = [
            line
            for line in requirements_file.read().splitlines()
            if not line.startswith("#")
        ]
    return requirements


setup(
    name='cp-geodesics',
    version='1.0.0',
    description='Completeness of Clifton-Pohl torus geodesics via complex-time continuation',
    install_requires=read_requirements('requirements.txt'),
    extras_require={'test': ['pytest']},
    packages=find_packages(exclude=['tests']),
    entry_points={'console_scripts': ['cp-geodesics=cp_geodesics.cli:main']},
)
