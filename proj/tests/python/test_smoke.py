import json
import os
import sys
import tempfile
import unittest

import vgs_wie

FIXTURES = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "fixtures")


class SmokeTest(unittest.TestCase):
    def test_simplify(self):
        s = vgs_wie.simplify('<div id="x" class="c"><script>x()</script><p style="a">Hi</p></div>')
        self.assertEqual(s["content"], '<div class="c"><p>Hi</p></div>')
        self.assertLess(s["simplified_length"], s["source_length"])
        self.assertEqual(vgs_wie.simplify(s["content"])["content"], s["content"])

    def test_segment(self):
        html = "<div><ul><li>a</li><li id='m'>b</li><li>c</li></ul></div>"
        seg = vgs_wie.local_segment(html, "//li[@id='m']", 0)
        self.assertEqual(seg["nodes"], ["/html/body/div/ul/li[2]"])
        wide = vgs_wie.local_segment(html, "//li[@id='m']")
        self.assertEqual(wide["distance"], 2)
        self.assertEqual(len(wide["nodes"]), 5)

    def test_xpath(self):
        html = "<ul><li>a</li><li><a href='/x'>b</a></li></ul>"
        self.assertEqual(vgs_wie.evaluate_xpath(html, "//li"), ["a", "b"])
        self.assertEqual(vgs_wie.evaluate_xpath(html, "//a/@href"), ["/x"])
        self.assertEqual(vgs_wie.absolute_xpaths(html, "//a"), ["/html/body/ul/li[2]/a"])
        self.assertFalse(vgs_wie.is_valid_xpath("//li["))
        with self.assertRaises(vgs_wie.VgsError) as ctx:
            vgs_wie.evaluate_xpath(html, "//li[")
        self.assertEqual(vgs_wie.error_code(str(ctx.exception)), "XPathSyntax")

    def test_regions(self):
        regions = vgs_wie.plan_regions(2500)
        self.assertEqual(regions, [(0, 0, 1100), (1, 1100, 1100), (2, 2200, 300)])
        html = '<body style="margin:0"><div style="height:2500px"></div></body>'
        self.assertEqual(vgs_wie.page_height(html), 2500)

    def test_metrics(self):
        p, r, f1 = vgs_wie.cell_metrics(["a", "b"], ["a"])
        self.assertAlmostEqual(p, 0.5)
        self.assertAlmostEqual(r, 1.0)
        self.assertAlmostEqual(f1, 2 / 3)
        self.assertEqual(vgs_wie.cell_metrics([], []), (1.0, 1.0, 1.0))

    def test_templates(self):
        self.assertIn("vgs_xpath_synthesis", vgs_wie.template_ids())
        text = vgs_wie.render_template("alignment_judge", {"0": "cost", "1": "price"})
        self.assertIn("Predicted attribute: cost", text)
        with self.assertRaises(vgs_wie.VgsError):
            vgs_wie.render_template("alignment_judge", {"0": "cost"})
        self.assertEqual(vgs_wie.recover_json('```json\n{"a": [1,],}\n```'), {"a": [1]})
        self.assertEqual(vgs_wie.recover_json("[1, 3]", "array"), [1, 3])
        self.assertIsNone(vgs_wie.recover_json("no json here"))

    def test_cli(self):
        code, _, err = vgs_wie.run_cli(["frobnicate"])
        self.assertEqual(code, 2)
        dataset = os.path.join(FIXTURES, "books", "dataset.jsonl")
        transcript = os.path.join(FIXTURES, "books", "vgs_transcript.json")
        with tempfile.TemporaryDirectory() as out:
            code, _, err = vgs_wie.run_cli(["generate", "--dataset", dataset, "--out", out, "--mock", transcript])
            self.assertEqual(code, 0, err)
            with open(os.path.join(out, "manifest.json"), encoding="utf-8") as f:
                manifest = json.load(f)
            self.assertEqual(len(manifest["samples"]), 12)


if __name__ == "__main__":
    sys.exit(unittest.main())
