"""
Setup script for hoi-dno package
"""

from setuptools import setup

setup()
