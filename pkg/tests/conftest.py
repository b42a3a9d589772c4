""" Shared fixtures. """

import pytest

from ..mdp_core import toggle2
from ..finite_horizon import constant_policy


@pytest.fixture
def toggle():
    return toggle2()


@pytest.fixture
def stay2(toggle):
    """ ``π_stay`` on the two-state model, H=2. """

    return constant_policy(toggle, 2, action=0)
