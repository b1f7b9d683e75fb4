from pathlib import Path
from typing import Dict, List, Sequence, Union

import numpy as np
import pandas as pd

from src.errors import PoleProximityError
from src.forms.BaseForm import BaseForm
from src.forms.BuffForm import BuffForm, u_f
from src.utils import get_logger

logger = get_logger(__name__)

FLOAT_FORMAT = "%.17g"


def rows_frame(rows: Sequence[Dict]) -> pd.DataFrame:
    """
    one row per dict; complex entries are split into <key>_re and <key>_im columns
    """
    flat: List[dict] = []
    for row in rows:
        entry = {}
        for key, value in row.items():
            if isinstance(value, (complex, np.complexfloating)):
                entry[f"{key}_re"] = float(np.real(value))
                entry[f"{key}_im"] = float(np.imag(value))
            else:
                entry[key] = value
        flat.append(entry)
    return pd.DataFrame(flat)


def write_csv(frame: pd.DataFrame, out: Union[str, Path]) -> Path:
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(out, index=False, float_format=FLOAT_FORMAT, lineterminator="\r\n")
    logger.info(f"wrote {out} ({len(frame)} rows)")
    return out


def omega_samples(form: BaseForm, radius: float, angles: int = 16, radii: int = 4) -> pd.DataFrame:
    """
    omega (and u_f for Buff forms) on a polar grid in D(0, radius); samples too close to a pole are skipped
    """
    rows = []
    for k in range(1, radii + 1):
        r = radius * k / radii
        for j in range(angles):
            z = r * np.exp(2j * np.pi * j / angles)
            _, distance = form.nearest_pole(z)
            if distance <= form.pole_guard:
                continue
            row = {"r": r, "angle": 2 * np.pi * j / angles, "z": complex(z), "omega": form.omega(z)}
            if isinstance(form, BuffForm):
                try:
                    row["u_f"] = u_f(form, z)
                except PoleProximityError:
                    row["u_f"] = complex(np.nan, np.nan)
            rows.append(row)
    return rows_frame(rows)
