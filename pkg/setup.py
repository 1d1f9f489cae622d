import setuptools

from bounty_hunter import __version__ as VERSION

with open("README.md", "r") as fh:
    LONG_DESCRIPTION = fh.read()

setuptools.setup(
    name="bounty-hunter",
    version=VERSION,
    description="A reward-driven planner for (simulated) adversary emulation.",
    long_description=LONG_DESCRIPTION,
    long_description_content_type="text/markdown",
    packages=["bounty_hunter"],
    # packages=setuptools.find_packages(exclude=['tests']),
    keywords=["adversary emulation", "attack planning", "red team"],
    install_requires=[
        "click>=7.1.2",
        "colorama>=0.4.3",
        "colorlog>=4.2.1",
        "networkx>=2.5",
        "PyYAML>=5.3",
        "voluptuous>=0.11.7",
    ],
    python_requires=">=3.7",
    classifiers=[
        "Programming Language :: Python :: 3.7",
        "Operating System :: OS Independent",
        "Development Status :: 3 - Alpha",
        "Topic :: Security",
    ],
)
