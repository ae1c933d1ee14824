"""
Hierarquia de exceções do simulador.

Todas derivam de ``SimulationError`` (que é um ``ValueError``), assim quem já
captura ``ValueError`` continua funcionando.
"""

from typing import Optional


class SimulationError(ValueError):
    """Erro base do simulador"""


class DimensionError(SimulationError):
    """Operadores ou tableaux com números de qubits diferentes"""


class TargetError(SimulationError):
    """Alvos duplicados ou fora do intervalo"""


class ParseError(SimulationError):
    """Erro de sintaxe no formato texto de circuitos/programas"""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"linha {line}: {message}"
        super().__init__(message)


class ParameterError(SimulationError):
    """Parâmetros físicos inválidos (probabilidades, tempos, T1/T2)"""


class DoubleAnnotationError(SimulationError):
    """Circuito já contém instruções de ruído"""


class ContractError(SimulationError):
    """Pré-condição de uma operação violada"""


class InfeasibleLayoutError(SimulationError):
    """Raios de Rydberg insuficientes para o layout pedido"""


class InfeasibleSeamError(InfeasibleLayoutError):
    """Perna de estabilizador de costura excede o raio ancilla-dado"""


class GenerationError(SimulationError):
    """Gerador de circuito recebeu uma configuração impossível"""


class NonGraphlikeError(SimulationError):
    """Mecanismo de erro dispara mais de 2 detectores após decomposição"""

    def __init__(self, message: str, instruction_index: Optional[int] = None):
        self.instruction_index = instruction_index
        super().__init__(message)


class OracleSizeError(SimulationError):
    """Síndrome grande demais para o oráculo de força bruta"""


class CapacityError(SimulationError):
    """Programa não cabe na capacidade de dados do dispositivo"""


class RoutingError(SimulationError):
    """Roteamento impossível (por exemplo, programa com T sem fábricas)"""


class UsageError(SimulationError):
    """Uso incorreto da linha de comando"""
