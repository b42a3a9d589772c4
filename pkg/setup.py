from setuptools import setup

setup(
    name="pips_mdp",
    version="0.1",
    packages=["pips_mdp", "pips_mdp.supervisors", "pips_mdp.tests"],
    package_dir={"pips_mdp": "."},
    package_data={"pips_mdp": ["fixtures/*.json"]},
    description="Rolling-horizon policy iteration with policy switching "
                "for finite MDPs",
    python_requires=">=3.9",
    install_requires=[
        "numpy>=1.22",
        "scipy>=1.8",
    ],
    extras_require={
        "tests": ["pytest>=7"],
    },
    entry_points={
        "console_scripts": ["pips-mdp=pips_mdp.experiment_cli:main"],
    },
)
