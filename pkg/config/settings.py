"""
Settings - Configurações centralizadas do simulador

Ordem de precedência (a última vence):
    1. valores padrão (Tabela de parâmetros do hardware)
    2. arquivo plano ``chave = valor``
    3. variáveis de ambiente ``NASIM_<CHAVE>`` (carregadas também de ``.env``)
    4. overrides explícitos (flags da CLI)
"""

import logging
import math
import os
from typing import Any, Dict, Optional

from dotenv import load_dotenv

logger = logging.getLogger(__name__)

ENV_PREFIX = "NASIM_"

# Valores padrão dos parâmetros físicos
DEFAULTS: Dict[str, Any] = {
    # Geometria do array
    "atom_spacing_um": 10.0,
    "r_ancilla_data_um": 28.0,
    "r_data_data_um": 14.0,
    "movement_speed_um_per_us": 0.55,
    # Tempos de operação
    "t_1q_us": 1.0,
    "t_2q_us": 5.0,
    "t_meas_us": 10000.0,
    "t1_us": 1e6,
    "t2_us": 1e6,
    # Taxas de erro
    "p_1q": 0.001,
    "p_2q": 0.001,
    "p_meas": 0.001,
    # Execução
    "seed": 1234,
    "shots": 10000,
    "workers": 1,
    "group_size": 16,
    "routing_distance": 9,
    "epsilon": 1e-10,
    "grover_iterations": 2,
    "database_path": "",
}

VALID_GROUP_SIZES = (1, 4, 9, 16)


def _coerce(key: str, raw: Any) -> Any:
    """Converte um valor bruto para o tipo do padrão correspondente"""
    default = DEFAULTS[key]
    if isinstance(raw, type(default)) and not isinstance(raw, bool):
        return raw
    text = str(raw).strip()
    if isinstance(default, int):
        return int(float(text))
    if isinstance(default, float):
        if text.lower() in ("inf", "infinity"):
            return math.inf
        return float(text)
    return text


class Settings:
    """Configurações do sistema"""

    def __init__(self, values: Optional[Dict[str, Any]] = None):
        self._values: Dict[str, Any] = dict(DEFAULTS)
        if values:
            for key, value in values.items():
                self.set(key, value)

    # ------------------------------------------------------------------
    # Carregamento
    # ------------------------------------------------------------------
    @classmethod
    def load(cls, path: Optional[str] = None,
             overrides: Optional[Dict[str, Any]] = None) -> "Settings":
        """
        Monta as configurações a partir de arquivo, ambiente e overrides.

        Args:
            path: arquivo plano ``chave = valor`` (opcional)
            overrides: valores explícitos, normalmente vindos da CLI;
                entradas ``None`` são ignoradas

        Returns:
            Settings validado
        """
        load_dotenv()
        settings = cls()

        if path:
            settings._read_file(path)

        for key in DEFAULTS:
            env_value = os.getenv(ENV_PREFIX + key.upper())
            if env_value is not None:
                settings.set(key, env_value)

        for key, value in (overrides or {}).items():
            if value is not None:
                settings.set(key, value)

        settings.validate()
        return settings

    def _read_file(self, path: str) -> None:
        with open(path, "r", encoding="utf-8") as fh:
            for number, line in enumerate(fh, start=1):
                content = line.split("#", 1)[0].strip()
                if not content:
                    continue
                if "=" not in content:
                    raise ValueError(f"{path}:{number}: esperado 'chave = valor'")
                key, raw = (part.strip() for part in content.split("=", 1))
                try:
                    self.set(key, raw)
                except ValueError as e:
                    raise ValueError(f"{path}:{number}: {e}") from e
        logger.info(f"✅ Configuração carregada de {path}")

    def set(self, key: str, value: Any) -> None:
        if key not in DEFAULTS:
            raise ValueError(f"chave desconhecida: {key}")
        try:
            self._values[key] = _coerce(key, value)
        except (TypeError, ValueError) as e:
            raise ValueError(f"valor inválido para {key}: {value!r}") from e

    def __getattr__(self, key: str) -> Any:
        values = self.__dict__.get("_values")
        if values is not None and key in values:
            return values[key]
        raise AttributeError(key)

    def as_dict(self) -> Dict[str, Any]:
        return dict(self._values)

    # ------------------------------------------------------------------
    # Validação
    # ------------------------------------------------------------------
    def validate(self) -> bool:
        """Valida configurações essenciais"""
        errors = []

        for key in ("p_1q", "p_2q", "p_meas"):
            if not 0.0 <= self._values[key] <= 1.0:
                errors.append(f"{key} deve estar entre 0 e 1")

        for key in ("atom_spacing_um", "r_ancilla_data_um", "r_data_data_um",
                    "movement_speed_um_per_us", "t_1q_us", "t_2q_us",
                    "t_meas_us", "t1_us", "t2_us", "epsilon"):
            if self._values[key] <= 0:
                errors.append(f"{key} deve ser positivo")

        if self._values["t2_us"] > 2 * self._values["t1_us"]:
            errors.append("t2_us não pode exceder 2·t1_us")

        if self._values["group_size"] not in VALID_GROUP_SIZES:
            errors.append(f"group_size deve estar em {VALID_GROUP_SIZES}")

        d = self._values["routing_distance"]
        if d < 3 or d % 2 == 0:
            errors.append("routing_distance deve ser ímpar e >= 3")

        if self._values["shots"] < 1:
            errors.append("shots deve ser >= 1")

        if self._values["workers"] < 1:
            errors.append("workers deve ser >= 1")

        if not 0.0 < self._values["epsilon"] < 1.0:
            errors.append("epsilon deve estar em (0, 1)")

        if errors:
            raise ValueError(f"Erros de configuração: {', '.join(errors)}")

        return True

    # ------------------------------------------------------------------
    # Objetos derivados
    # ------------------------------------------------------------------
    def noise_params(self, p: Optional[float] = None, t1_us: Optional[float] = None):
        """NoiseParams a partir das configurações (p e T1 opcionais sobrescrevem)"""
        from src.noise_model import NoiseParams

        rate_1q = self.p_1q if p is None else p
        rate_2q = self.p_2q if p is None else p
        rate_meas = self.p_meas if p is None else p
        t1 = self.t1_us if t1_us is None else t1_us
        t2 = self.t2_us if t1_us is None else t1_us
        return NoiseParams(
            p_1q=rate_1q, p_2q=rate_2q, p_meas=rate_meas,
            t_1q=self.t_1q_us, t_2q=self.t_2q_us, t_meas=self.t_meas_us,
            T1=t1, T2=t2,
        )

    def timing_params(self, k: Optional[int] = None, d: Optional[int] = None):
        """TimingParams para o simulador de roteamento"""
        from src.routing_sim import TimingParams

        return TimingParams.from_hardware(
            k=self.group_size if k is None else k,
            d=self.routing_distance if d is None else d,
            spacing=self.atom_spacing_um,
            t_1q=self.t_1q_us,
            t_2q=self.t_2q_us,
            t_meas=self.t_meas_us,
            speed=self.movement_speed_um_per_us,
        )
