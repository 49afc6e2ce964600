"""Brute-force reference computations for HMM inference.

Everything here enumerates tag paths explicitly, so it is exponential in
sentence length and only usable on toy sizes; that independence from the
dynamic-programming code paths is the point.
"""

import itertools

import numpy as np


def path_probability(initial, transitions, emission_scores, path):
    p = initial[path[0]] * emission_scores[0][path[0]]
    for t in range(1, len(path)):
        p *= transitions[path[t - 1], path[t]] * emission_scores[t][path[t]]
    return p


def enumerate_posteriors(initial, transitions, emission_scores):
    """Marginals and log-likelihood by summing over every tag path."""
    T, K = emission_scores.shape
    marginals = np.zeros((T, K))
    total = 0.0
    for path in itertools.product(range(K), repeat=T):
        p = path_probability(initial, transitions, emission_scores, path)
        total += p
        for t, state in enumerate(path):
            marginals[t, state] += p
    return marginals / total, float(np.log(total))


def best_path_score(initial, transitions, emission_scores):
    """Log score of the most likely path, by enumeration."""
    T, K = emission_scores.shape
    best = -np.inf
    log_init = np.log(initial)
    log_trans = np.log(transitions)
    log_emit = np.log(emission_scores)
    for path in itertools.product(range(K), repeat=T):
        score = log_init[path[0]] + log_emit[0][path[0]]
        for t in range(1, T):
            score += log_trans[path[t - 1], path[t]] + log_emit[t][path[t]]
        best = max(best, score)
    return best


def reference_em_iteration(initial, transitions, emissions, sentences, masks,
                           lambda_trans, lambda_emit):
    """One EM iteration where the E-step enumerates paths outright.

    Returns the new parameters and the log-likelihood of the *input*
    parameters, mirroring what a trainer evaluates during its E-step.
    """
    k = len(initial)
    d = emissions.shape[1]
    init_counts = np.zeros(k)
    trans_counts = np.zeros((k, k))
    emit_counts = np.zeros((k, d))
    loglik = 0.0
    for obs, mask in zip(sentences, masks):
        scores = emissions[:, obs].T * mask
        T = len(obs)
        total = 0.0
        weights = []
        for path in itertools.product(range(k), repeat=T):
            p = path_probability(initial, transitions, scores, path)
            weights.append((path, p))
            total += p
        loglik += np.log(total)
        for path, p in weights:
            w = p / total
            init_counts[path[0]] += w
            for t in range(1, T):
                trans_counts[path[t - 1], path[t]] += w
            for t, state in enumerate(path):
                emit_counts[state, obs[t]] += w
    new_init = (init_counts + lambda_trans) / (init_counts.sum() + lambda_trans * k)
    new_trans = (trans_counts + lambda_trans) / (
        trans_counts.sum(axis=1, keepdims=True) + lambda_trans * k)
    new_emit = (emit_counts + lambda_emit) / (
        emit_counts.sum(axis=1, keepdims=True) + lambda_emit * d)
    return (new_init, new_trans, new_emit), float(loglik)


def random_model(rng, n_tags, n_obs):
    """A random strictly-positive HMM parameter set."""
    initial = rng.dirichlet(np.ones(n_tags)) + 1e-3
    initial /= initial.sum()
    transitions = rng.dirichlet(np.ones(n_tags), size=n_tags) + 1e-3
    transitions /= transitions.sum(axis=1, keepdims=True)
    emissions = rng.dirichlet(np.ones(n_obs), size=n_tags) + 1e-3
    emissions /= emissions.sum(axis=1, keepdims=True)
    return initial, transitions, emissions
