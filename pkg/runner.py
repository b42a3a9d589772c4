""" Establishing the basic structure of the step-driven runs. """

import os
import logging
from abc import ABC, abstractmethod

package_dir = os.path.abspath(
    os.path.dirname(__file__)
)
""" Directory of the main package. """
fixtures_dir = os.path.join(
    package_dir,
    "fixtures"
)
""" Directory of the bundled model files. """
toggle2_path = os.path.join(
    fixtures_dir,
    "toggle2.json"
)
""" Path of `toggle2.json`, the two-state reference model. """

__all__ = ["BaseRunner", "package_dir", "fixtures_dir", "toggle2_path"]

logger = logging.getLogger(__name__)


class BaseRunner(ABC):
    """
    General loop for runs that advance one step at a time.

    Subclasses implement :meth:`loop`, called once per step with a
    1-based step counter, and :meth:`finish`, which packs the result
    returned by :meth:`start`.

    Attributes
    ----------
    max_steps : int
        Hard limit on the number of steps.
    steps_taken : int
        Steps executed so far.
    """

    def __init__(self, max_steps):
        """
        Parameters
        ----------
        max_steps : int
            Hard limit on the number of steps.
        """

        self._run = True
        self.max_steps = int(max_steps)
        self.steps_taken = 0
        self.stop_reason = None

    def _loop(self):
        """ A hidden method avoids interference. """

        k = 0
        while self._run and k < self.max_steps:
            k += 1
            self.steps_taken = k
            self.loop(k)
        if self._run:
            self.stop_reason = "max_steps"
        logger.debug("%s stopped after %d steps (%s)",
                     self.__class__.__name__, self.steps_taken,
                     self.stop_reason)

    def stop(self, reason):
        """
        Ask the loop to end after the current step.

        Parameters
        ----------
        reason : str
            Recorded as ``stop_reason``.
        """

        self._run = False
        self.stop_reason = reason

    def start(self):
        """ Run the loop and return whatever :meth:`finish` builds. """

        self._loop()
        return self.finish()

    @abstractmethod
    def loop(self, k):
        """
        One step of the run.

        Parameters
        ----------
        k : int
            Step counter, starting at 1.
        """

        pass

    @abstractmethod
    def finish(self):
        """ Build the result of the run. """

        pass
