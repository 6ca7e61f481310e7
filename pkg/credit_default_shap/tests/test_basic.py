"""Basic packaging tests."""
import unittest
import os
import toml

from credit_default_shap import __version__ as project_version
from credit_default_shap.utils.dispatcher import Dispatcher, handle_subcommands, registered_subcommands
from credit_default_shap.utils.errors import ConfigError
from credit_default_shap.worker import COMMAND


class TestVersion(unittest.TestCase):
    """Test Version is the same."""

    def test_version(self):
        """Verify that pyproject.toml version is same as version specified in the package."""
        parent_path = os.path.dirname(os.path.dirname(os.path.dirname(os.path.realpath(__file__))))
        poetry_version = toml.load(os.path.join(parent_path, "pyproject.toml"))["tool"]["poetry"]["version"]
        self.assertEqual(project_version, poetry_version)


class TestRegistry(unittest.TestCase):
    """Subcommand registration."""

    def test_all_subcommands_registered(self):
        """Every command-line subcommand has a handler."""
        self.assertEqual(
            registered_subcommands(COMMAND),
            ["generate-sample", "ingest", "train", "compare", "sweep", "explain", "predict"],
        )

    def test_unknown_subcommand_lists_known_names(self):
        """An unregistered name is a config error that lists the registered subcommands."""
        with self.assertRaises(ConfigError) as ctx:
            handle_subcommands(COMMAND, "fit", Dispatcher())
        self.assertIn("'fit'", str(ctx.exception))
        self.assertIn("generate-sample, ingest, train", str(ctx.exception))
