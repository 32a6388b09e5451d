import json
import unittest
from pathlib import Path

import pandas as pd

from core.py.pipeline import Pipeline, RunConfig


class TestPipeline(unittest.TestCase):
    @classmethod
    def setUp(cls):
        # set test directories and files before running tests
        cls.test_case_dir = Path("./data/test_case")
        cls.test_case_dir.mkdir(parents=True, exist_ok=True)

        # two small threads: one asks for shared experience, one for emotional support
        corpus = {
            "corpus_id": "test_case",
            "language": "fr",
            "threads": [
                {
                    "thread_id": "t-1",
                    "messages": [
                        {"message_id": "t-1-1", "author": "Anne", "parent_id": None, "timestamp": None,
                         "body": "Bonjour à tous, voici mon problème : je dors très mal. Quelqu'un a déjà vécu ça ?"},
                        {"message_id": "t-1-2", "author": "Bruno", "parent_id": "t-1-1", "timestamp": None,
                         "body": "Moi aussi, bon courage !"},
                    ],
                },
                {
                    "thread_id": "t-2",
                    "messages": [
                        {"message_id": "t-2-1", "author": "", "parent_id": None, "timestamp": None,
                         "body": "J'ai besoin de parler, je me sens seule. Ça me ferait du bien."},
                    ],
                },
            ],
        }
        (cls.test_case_dir / "corpus.json").write_text(json.dumps(corpus, ensure_ascii=False), encoding="utf-8")

    def test_pipeline_run(self):
        config = RunConfig(command="pipeline", corpus=self.test_case_dir / "corpus.json", out=self.test_case_dir)
        exit_code = Pipeline.run(config)
        self.assertEqual(exit_code, 0, "Pipeline did not exit with code 0")
        # verify output files
        grid_path = self.test_case_dir / "grid.csv"
        report_path = self.test_case_dir / "report.md"
        self.assertTrue(grid_path.exists(), "Grid CSV file was not created")
        self.assertTrue(report_path.exists(), "Script report was not created")
        # verify contents of the grid
        grid = pd.read_csv(grid_path, index_col="slot")
        self.assertEqual(len(grid), 18, "Grid should have one row per slot")
        self.assertEqual(list(grid.columns), ["t-1", "t-2"], "Grid columns should follow thread order")
        self.assertEqual(grid.loc["ProblemPresentation", "t-1"], 1)
        self.assertEqual(grid.loc["ExpectedBenefit", "t-2"], 1)
        assignments = json.loads((self.test_case_dir / "assignments.json").read_text(encoding="utf-8"))
        labels = {a["thread_id"]: a["assigned"] for a in assignments["assignments"]}
        self.assertEqual(labels, {"t-1": ["ExperienceSharing"], "t-2": ["EmotionalSupport"]})


if __name__ == "__main__":
    unittest.main()
