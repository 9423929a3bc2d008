# -*- coding: utf-8 -*-
"""Setup file for ekiflow. Use setup.cfg to configure your project.

The layout follows PyScaffold: sources under src/, metadata and tool
configuration in setup.cfg.
"""
# third party
from setuptools import setup

if __name__ == "__main__":
    setup()
