#!/usr/bin/env python
# vim: set sw=4 et:

from setuptools import setup

__version__ = '0.1.0'


def load_requirements(filename):
    with open(filename, 'rt') as fh:
        requirements = fh.read().rstrip().split('\n')
    return requirements


setup(
    name='crnrealize',
    version=__version__,
    license='Apache 2.0',
    packages=['crnrealize', 'crnrealize_cli'],
    description='Sparse, dense, weakly reversible and linearly conjugate '
    'realizations of mass-action reaction networks',
    long_description=open('README.md').read(),
    provides=[
        'crnrealize',
        'crnrealize_cli',
    ],
    install_requires=load_requirements('requirements.txt')
    + load_requirements('cli-requirements.txt'),
    zip_safe=False,
    entry_points="""
        [console_scripts]
        crnrealize=crnrealize_cli.main:cli
        crnr=crnrealize_cli.main:cli
    """,
    tests_require=load_requirements('test-local-requirements.txt'),
    classifiers=[
        'Development Status :: 4 - Beta',
        'Environment :: Console',
        'License :: OSI Approved :: Apache Software License',
        'Programming Language :: Python :: 3.7',
        'Topic :: Scientific/Engineering :: Chemistry',
        'Topic :: Scientific/Engineering :: Mathematics',
    ],
)
