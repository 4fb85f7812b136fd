from setuptools import setup, find_packages
import EQLAB

setup(
    name='eqlab',
    version=EQLAB.__version__,
    packages=find_packages(exclude=['tests']),
    license='BSD 3-clause "New" or "Revised License"',
    description='Enhanced quantization laboratory: weak correspondence, coherent-state geometry and dynamics',
    long_description=open('README.md').read(),
    long_description_content_type='text/markdown',
    install_requires=[
                       'numpy', 'scipy>=1.8', 'sympy>=1.10', 'pyparsing>=3.1'],
    extras_require={'tests': ['pytest']},
    entry_points={'console_scripts': ['eqlab=EQLAB.cli:main']}
)
