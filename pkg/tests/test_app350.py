import json

import pytest

from privaudit.app350 import convert_app350_dir, load_app350_dir
from privaudit.classifier import read_annotated_jsonl

POLICY_YML = """policy_id: 42
policy_name: example
segments:
  - segment_id: 0
    segment_text: "We collect your email address to create an account."
    annotations:
      - practice: Contact_E_Mail_Address_1stParty
        modality: PERFORMED
      - practice: Identifier_Cookie_3rdParty
        modality: NOT_PERFORMED
  - segment_id: 1
    segment_text: "This paragraph has no annotations."
    annotations: []
  - segment_id: 2
    segment_text: "Unknown practice names are skipped."
    annotations:
      - practice: Made_Up_Practice_1stParty
        modality: PERFORMED
"""


class TestApp350Converter:
    def test_conversion(self, tmp_path):
        (tmp_path / "policy_42.yml").write_text(POLICY_YML, encoding="utf-8")
        segments, warnings = load_app350_dir(tmp_path)
        assert len(segments) == 3
        assert segments[0].triples == frozenset(
            {
                ("Contact_E_Mail_Address", "Performed", "1stParty"),
                ("Identifier_Cookie", "Not_Performed", "3rdParty"),
            }
        )
        assert segments[1].triples == frozenset()
        assert segments[2].triples == frozenset()
        assert len(warnings) == 1 and "Made_Up_Practice" in warnings[0]

    def test_jsonl_output(self, tmp_path):
        (tmp_path / "policy.yml").write_text(POLICY_YML, encoding="utf-8")
        out = tmp_path / "corpus.jsonl"
        count = convert_app350_dir(tmp_path, out)
        assert count == 3
        assert len(read_annotated_jsonl(out)) == 3

    def test_empty_dir_raises(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_app350_dir(tmp_path)
