"""
PIPS rolling-horizon toolkit
============================

This package contains exact finite-horizon planning tools for finite
discounted MDPs, built around policy iteration with policy switching
(PIPS). The user will find:

* A model type with validation, a JSON file format and a generator
* Exact H-horizon evaluation and backward induction
* Policy switching and synchronous/asynchronous PIPS drivers
* An on-line rolling-horizon controller fed by supervisors
* Communicating-class analysis and rolling-horizon error sweeps
* A command-line front end

Policies are stored by remaining horizon: ``σ[H]`` is the mapping the
rolling controller applies, ``σ[1]`` the last one.

.. Metadata:
.. date:: 17-Oct-2026
.. version:: 0.1
.. license:: MIT
.. _`pips_mdp`:
"""
