"""
JSON and CSV writers for command results.

Numbers carry 15 significant digits; infinities are written as ``inf`` and
``-inf`` (JSON strings), NaN as an empty CSV cell or JSON null. Files are
written once, atomically, through a temporary file in the target directory.
"""

import io
import json
import logging
import math
import os
import sys
import tempfile
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Sequence, TextIO, Union

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

OUTPUT_FORMATS = ('json', 'csv')


def format_number(value: float) -> str:
    if math.isnan(value):
        return ''
    if math.isinf(value):
        return 'inf' if value > 0 else '-inf'
    return f"{value:.15g}"


def jsonable(obj: Any) -> Any:
    """Convert results (dataclasses, numpy scalars, tuples) into plain JSON values."""
    if hasattr(obj, 'as_dict'):
        return jsonable(obj.as_dict())
    if isinstance(obj, Mapping):
        return {str(key): jsonable(value) for key, value in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [jsonable(value) for value in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        if math.isnan(value):
            return None
        if math.isinf(value):
            return format_number(value)
        return float(f"{value:.15g}")
    return obj


def atomic_write(path: Union[str, Path], text: str) -> Path:
    """Write ``text`` to ``path`` via a temporary file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix='.tmp')
    try:
        with os.fdopen(fd, 'w', encoding='utf-8', newline='') as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def header_comment(fields: Mapping[str, Any]) -> str:
    """``# key=value, key=value`` line placed above CSV tables."""
    parts = []
    for key, value in fields.items():
        if isinstance(value, float):
            value = format_number(value)
        elif value is None:
            value = ''
        parts.append(f"{key}={value}")
    return '# ' + ', '.join(parts)


class ReportWriter:
    """Renders one command result as JSON or CSV to a file or stdout."""

    def __init__(self, out: Optional[Union[str, Path]] = None, fmt: str = 'json',
                 stream: Optional[TextIO] = None):
        """
        Args:
            out: Destination file; ``None`` writes to ``stream``.
            fmt: ``json`` or ``csv``.
            stream: Fallback text stream, stdout by default.
        """
        if fmt not in OUTPUT_FORMATS:
            raise ValueError(f"Unknown output format '{fmt}'")
        self.out = None if out is None else Path(out)
        self.fmt = fmt
        self.stream = stream

    def render_document(self, doc: Any) -> str:
        return json.dumps(jsonable(doc), indent=2) + '\n'

    def render_table(self, rows: Sequence[Mapping[str, Any]], columns: Sequence[str],
                     header: Optional[Mapping[str, Any]] = None) -> str:
        frame = pd.DataFrame(list(rows), columns=list(columns))
        buffer = io.StringIO()
        if header:
            buffer.write(header_comment(header) + '\n')
        frame.to_csv(buffer, index=False, float_format='%.15g', na_rep='', lineterminator='\n')
        return buffer.getvalue()

    def write_document(self, doc: Any) -> str:
        """Write a JSON document and return the text."""
        return self._emit(self.render_document(doc))

    def write_table(self, rows: Sequence[Mapping[str, Any]], columns: Sequence[str],
                    header: Optional[Mapping[str, Any]] = None, document: Any = None) -> str:
        """
        Write tabular rows.

        In JSON mode ``document`` is written when given, otherwise the header
        fields plus a ``rows`` list.
        """
        if self.fmt == 'csv':
            return self._emit(self.render_table(rows, columns, header))
        if document is None:
            document = {**dict(header or {}), 'rows': [{c: row.get(c) for c in columns} for row in rows]}
        return self._emit(self.render_document(document))

    def _emit(self, text: str) -> str:
        if self.out is None:
            stream = self.stream or sys.stdout
            stream.write(text)
            stream.flush()
        else:
            atomic_write(self.out, text)
            logger.info(f"Report written: {self.out}")
        return text


def read_table(path: Union[str, Path]) -> pd.DataFrame:
    """Read a table written by :class:`ReportWriter`, skipping the header comment."""
    return pd.read_csv(path, comment='#')
