import io
import json
import logging
from typing import Dict, Optional, Sequence

import numpy as np
import pandas

from cp_geodesics.cont_engine import ContinuationTrace
from cp_geodesics.classifier import SweepRow

logger = logging.getLogger("cp_geodesics.output")

FLOAT_FORMAT = "%.17g"
TRACE_COLUMNS = ["t_re", "t_im", "u_re", "u_im", "v_re", "v_im", "du_re", "du_im", "dv_re", "dv_im"]
SWEEP_COLUMNS = ["alpha", "beta", "x", "y", "P", "analytic", "numeric", "agree", "numeric_error"]


class NPArrayEncoder(json.JSONEncoder):
    def default(self, obj):
        if isinstance(obj, np.ndarray):
            return [None if np.isnan(item) else item for item in obj.tolist()]
        if isinstance(obj, (complex, np.complexfloating)):
            return [obj.real, obj.imag]
        if isinstance(obj, np.integer):
            return int(obj)
        if isinstance(obj, np.floating):
            return float(obj)
        return json.JSONEncoder.default(self, obj)


def trace_frame(trace: ContinuationTrace) -> pandas.DataFrame:
    columns = [trace.times] + [trace.states[:, i] for i in range(trace.states.shape[1])]
    data = {}
    for name, values in zip(TRACE_COLUMNS[::2], columns):
        data[name] = values.real
        data[name.replace("_re", "_im")] = values.imag
    return pandas.DataFrame(data, columns=TRACE_COLUMNS)


def sweep_frame(rows: Sequence[SweepRow]) -> pandas.DataFrame:
    records = [
        {
            "alpha": row.ic.alpha,
            "beta": row.ic.beta,
            "x": row.ic.x,
            "y": row.ic.y,
            "P": row.P,
            "analytic": row.analytic.value,
            "numeric": row.numeric.value if row.numeric is not None else None,
            "agree": row.agree,
            "numeric_error": row.numeric_error,
        }
        for row in rows
    ]
    return pandas.DataFrame.from_records(records, columns=SWEEP_COLUMNS)


def render(frame: pandas.DataFrame, fmt: str, metadata: Optional[Dict] = None) -> str:
    """Serialize a table as csv (metadata as a trailing comment line) or json"""
    logger.debug(f"rendering {len(frame)} rows as {fmt}")
    if fmt == "json":
        document = {"rows": frame.astype(object).where(frame.notna(), None).to_dict(orient="records")}
        if metadata is not None:
            document["metadata"] = metadata
        return json.dumps(document, cls=NPArrayEncoder) + "\n"
    buffer = io.StringIO()
    frame.to_csv(buffer, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    if metadata is not None:
        buffer.write("# metadata " + json.dumps(metadata, cls=NPArrayEncoder) + "\n")
    return buffer.getvalue()


def render_record(record: Dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(record, cls=NPArrayEncoder) + "\n"
    frame = pandas.DataFrame([{k: v for k, v in record.items() if not isinstance(v, (list, dict))}])
    return render(frame, "csv")


def format_number(value: float) -> str:
    return format(value, ".17g")

