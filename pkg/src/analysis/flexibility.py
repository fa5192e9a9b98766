import math

from scipy.special import gammaln

from src.exceptions import BadParams


def _check(M: int, V: int) -> None:
    if M < 1 or V < 1 or M % V:
        raise BadParams(f'V={V} must divide M={M}')


def flexibility_log_gain(M: int, V: int, exact: bool = False) -> float:
    '''
    Natural log of the number of ways to split M rows into ordered groups
    of V, i.e. ln(M! / (V!)^(M/V)): the factor by which row shuffling
    multiplies the number of block-wise masks.

    The default path uses log-gamma and never overflows. exact=True
    computes the multinomial as a Python integer first; it is only
    practical for small M and serves as a cross-check.
    '''
    _check(M, V)
    if exact:
        return math.log(math.factorial(M) // math.factorial(V) ** (M // V))
    return float(gammaln(M + 1) - (M // V) * gammaln(V + 1))


def flexibility_log10_gain(M: int, V: int) -> float:
    """Same count in base 10, handy for reporting."""
    return flexibility_log_gain(M, V) / math.log(10)
