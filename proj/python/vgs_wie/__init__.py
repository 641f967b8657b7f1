"""Python access to the vgs-wie wrapper generation toolkit."""

from ._core import (
    VgsError,
    absolute_xpaths,
    cell_metrics,
    error_code,
    evaluate_xpath,
    is_valid_xpath,
    local_segment,
    page_height,
    plan_regions,
    recover_json,
    render_template,
    run_cli,
    simplify,
    template_ids,
)

__all__ = [
    "VgsError",
    "absolute_xpaths",
    "cell_metrics",
    "error_code",
    "evaluate_xpath",
    "is_valid_xpath",
    "local_segment",
    "page_height",
    "plan_regions",
    "recover_json",
    "render_template",
    "run_cli",
    "simplify",
    "template_ids",
]
