"""SynthMatch Meta information."""

__title__ = 'synthmatch'
__description__ = ('Synthetic matching control estimator for panel-data '
                   'counterfactuals, with SC/dSC/OLS baselines and a Monte Carlo harness')
__version__ = '0.4.0'
__author__ = 'synthmatch developers'
__author_email__ = ''
__license__ = 'BSD'
