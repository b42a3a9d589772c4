""" Entry point for the execution of the main package. """

from .experiment_cli import main


if __name__ == '__main__':
    main()
