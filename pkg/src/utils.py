# src/utils.py
import sys
from typing import Dict, List, Optional, Sequence

import pandas as pd

from src.exceptions import UsageError


def parse_number_list(text: str, cast=float) -> List:
    """'3,5,7' -> [3, 5, 7]"""
    try:
        return [cast(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise UsageError(f"lista inválida: {text!r}")


def rows_to_frame(rows: Sequence[Dict], columns: Sequence[str]) -> pd.DataFrame:
    return pd.DataFrame(list(rows), columns=list(columns))


def write_csv(rows: Sequence[Dict], columns: Sequence[str], out: Optional[str] = None) -> None:
    """Escreve as linhas em CSV UTF-8 no arquivo ou na saída padrão"""
    frame = rows_to_frame(rows, columns)
    if out:
        frame.to_csv(out, index=False, encoding="utf-8")
    else:
        frame.to_csv(sys.stdout, index=False)


def write_text(text: str, out: Optional[str] = None) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
