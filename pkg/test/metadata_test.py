import unittest
from test.utils import CWD

import ctcp


class TestMetadata(unittest.TestCase):
    """Test case for the package metadata"""

    def test_license_names_the_authors(self) -> None:
        license_path = CWD.parent / "LICENSE.txt"
        text = license_path.read_text(encoding="utf-8")
        self.assertIn(f"Copyright (c) 2024 {ctcp.__author__}", text)
        self.assertRegex(ctcp.__version__, r"^\d+\.\d+\.\d+$")
