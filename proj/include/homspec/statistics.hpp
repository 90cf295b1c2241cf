#pragma once

// Photon-number statistics of weak-coherent-state pairs, the two-photon
// truncation bound, event-class weights, and the final analytic coincidence
// model with optional detector-gate averaging. Pure functions throughout.

namespace homspec::stats {

// The two sources: mean photons per detection gate (identical for both),
// shared envelope half-width at 1/e, frequency mismatch (non-negative; the
// sign is unobservable), and a record-keeping mean frequency that never
// enters any computation.
struct SourcePairSpec {
    double mu = 0.1;
    double sigma_s = 10e-9;
    double delta_rad_s = 0.0;
    double omega_mean_rad_s = 0.0;

    void validate() const;
    // True when mu exceeds the 0.22 bound where the two-photon truncation
    // error passes ~1%.
    bool truncation_warning() const { return mu > 0.22; }
};

struct EventClassWeights {
    double p11 = 0.0;
    double p20 = 0.0;
    double p02 = 0.0;
    double normalizer = 0.0;  // p11 + p20 + p02
};

// Poisson P(n | mu). Log-space for n > 20.
double poisson_pn(int n, double mu);

// P(m, n | mu) = mu^(m+n) e^(-2 mu) / (m! n!), two independent sources.
double joint_fock_probability(int m, int n, double mu);

// Probability that the two sources emit three or more photons in total:
// the Poisson(2 mu) upper tail beyond 2.
double truncation_tail(double mu);

// P(>=3 total | >=2 total): the conditional variant, exposed for
// transparency; not the acceptance metric.
double truncation_tail_conditional(double mu);

// p11 = mu^2 e^(-2mu), p20 = p02 = mu^2 e^(-2mu) / 2.
EventClassWeights event_weights(double mu);

// Final coincidence model: 1/2 - (1/4) exp(-tau^2/(2 sigma^2)) cos(tau delta).
double model_coincidence(double tau_s, double sigma_s, double delta_rad_s);

// (baseline - minimum) / baseline. Throws DataError on baseline <= 0.
double visibility(double baseline, double minimum);

// How the two detection gates enter the delay axis: a single boxcar of the
// gate width on the scanned delay (the default convention), or the
// triangular kernel a physical pair of equal gates produces.
enum class GateKernel { boxcar, triangular };

// model_coincidence convolved in tau with the chosen unit-area gate kernel.
// gate_width_s == 0 reduces exactly to model_coincidence. For sigma much
// larger than the gate, the beat term is scaled by sinc(delta Tg / 2)
// (boxcar) or sinc^2(delta Tg / 2) (triangular).
double gate_averaged_model(double tau_s, double sigma_s, double delta_rad_s,
                           double gate_width_s, GateKernel kernel = GateKernel::boxcar);

}  // namespace homspec::stats
