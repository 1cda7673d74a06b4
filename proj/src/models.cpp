#include "igsf/models.hpp"

#include <string>

#include "igsf/errors.hpp"

namespace igsf {
namespace {

void check_particles(const Ensemble& particles, int dim, const char* who) {
  if (particles.rows() != dim)
    throw DimensionError(std::string(who) + ": particles have dimension " +
                         std::to_string(particles.rows()) + ", model expects " +
                         std::to_string(dim));
  if (particles.cols() < 1) throw ParameterError(std::string(who) + ": empty ensemble");
}

// Continuous-model step shared across the noisy and deterministic variants.
// `stream` == nullptr drops the noise term (and consumes no draws).
Ensemble step_continuous(const ContinuousModel& model, const Ensemble& particles, double t_from,
                         double t_to, RngStream* stream, const PropagateOptions& opt) {
  check_particles(particles, model.state_dim, "propagate_subensemble");
  const double h = t_to - t_from;
  if (!(h > 0.0)) throw ParameterError("propagate_subensemble: step must advance time");
  const int dim = model.state_dim;
  const int count = static_cast<int>(particles.cols());

  const Vector anchor_mean = particles.rowwise().mean();
  const Matrix drift_mean = psl_linearize(model, anchor_mean, t_from);
  const Matrix g = model.diffusion(t_from);
  if (g.rows() != dim)
    throw DimensionError("propagate_subensemble: diffusion has " + std::to_string(g.rows()) +
                         " rows for a " + std::to_string(dim) + "-dimensional model");
  const Matrix ggt = g * g.transpose();

  // Trailing pure-Brownian coordinates (parameter augmentation) decouple from
  // the leading block, so the expensive discretization runs at the leading
  // size. Verify the structure before trusting the hint.
  int tail = model.brownian_tail_dim;
  if (tail < 0 || tail > dim) throw ParameterError("propagate_subensemble: bad tail dimension");
  int head = dim - tail;
  if (tail > 0) {
    const bool decoupled = drift_mean.bottomRows(tail).isZero(0.0) &&
                           drift_mean.topRightCorner(head, tail).isZero(0.0) &&
                           ggt.topRightCorner(head, tail).isZero(0.0);
    if (!decoupled) {
      tail = 0;
      head = dim;
    }
  }

  Vector force = Vector::Zero(dim);
  if (model.forcing) {
    force = model.forcing(0.5 * (t_from + t_to));
    if (force.size() != dim)
      throw DimensionError("propagate_subensemble: forcing size mismatch");
  }
  const bool forced = !force.isZero(0.0);

  Matrix noise_cov;
  Matrix phi_shared = Matrix::Identity(dim, dim);
  Vector forced_shared = Vector::Zero(dim);
  if (head == 0) {
    noise_cov = ggt * h;
  } else {
    const Discretization d =
        discretize_lti(drift_mean.topLeftCorner(head, head), g.topRows(head), h);
    noise_cov = Matrix::Zero(dim, dim);
    noise_cov.topLeftCorner(head, head) = d.noise_cov;
    if (tail > 0) noise_cov.bottomRightCorner(tail, tail) = ggt.bottomRightCorner(tail, tail) * h;
    phi_shared.topLeftCorner(head, head) = d.phi;
    if (forced) {
      const ForcedTransition ft =
          lti_transition(drift_mean.topLeftCorner(head, head), force.head(head), h);
      phi_shared.topLeftCorner(head, head) = ft.phi;
      forced_shared.head(head) = ft.forced;
    }
  }
  if (tail > 0 && forced) forced_shared.tail(tail) = force.tail(tail) * h;

  Matrix chol_noise;
  if (stream != nullptr) chol_noise = chol_psd(noise_cov, default_jitter(noise_cov)).lower;

  const bool per_particle = opt.anchor == AnchorPolicy::PerParticle && head > 0;

  Ensemble out(dim, count);
  for (int u = 0; u < count; ++u) {
    const Vector x = particles.col(u);
    Vector y(dim);
    if (per_particle) {
      const Matrix drift_u = psl_linearize(model, x, t_from);
      if (head == dim) {
        const ForcedTransition ft = forced
                                        ? lti_transition(drift_u, force, h)
                                        : ForcedTransition{mat_exp(drift_u, h), Vector::Zero(dim)};
        y = ft.phi * x + ft.forced;
      } else {
        const ForcedTransition ft =
            forced ? lti_transition(drift_u.topLeftCorner(head, head), force.head(head), h)
                   : ForcedTransition{mat_exp(drift_u.topLeftCorner(head, head), h),
                                      Vector::Zero(head)};
        y.head(head) = ft.phi * x.head(head) + ft.forced;
        y.tail(tail) = x.tail(tail) + forced_shared.tail(tail);
      }
    } else {
      y = phi_shared * x + forced_shared;
    }
    if (stream != nullptr) y += chol_noise * stream->normals(dim);
    out.col(u) = y;
  }
  if (!out.allFinite())
    throw NumericalError("propagate_subensemble: non-finite predicted particles");
  return out;
}

Ensemble step_discrete(const DiscreteModel& model, const Ensemble& particles, int step_index,
                       RngStream* stream) {
  check_particles(particles, model.state_dim, "propagate_subensemble");
  const int count = static_cast<int>(particles.cols());
  Ensemble out(model.state_dim, count);
  const Vector zero_noise = Vector::Zero(model.noise_dim);
  for (int u = 0; u < count; ++u) {
    const Vector w = (stream != nullptr) ? stream->normals(model.noise_dim) : zero_noise;
    const Vector y = model.map(particles.col(u), step_index, w);
    if (y.size() != model.state_dim)
      throw DimensionError("propagate_subensemble: map returned wrong dimension");
    out.col(u) = y;
  }
  if (!out.allFinite())
    throw NumericalError("propagate_subensemble: non-finite predicted particles");
  return out;
}

}  // namespace

ContinuousModel augment(const ContinuousModel& base, const AugmentedSpec& spec) {
  if (base.state_dim != spec.base_dim)
    throw DimensionError("augment: base model dimension " + std::to_string(base.state_dim) +
                         " does not match spec base_dim " + std::to_string(spec.base_dim));
  if (spec.param_dim < 0) throw ParameterError("augment: negative param_dim");
  if (spec.param_dim == 0) return base;
  if (spec.pseudo_noise.size() != spec.param_dim)
    throw DimensionError("augment: pseudo_noise size mismatch");

  const int nb = spec.base_dim;
  const int np = spec.param_dim;
  const int dim = nb + np;
  const Vector pseudo = spec.pseudo_noise;

  ContinuousModel out;
  out.state_dim = dim;
  out.brownian_tail_dim = np;
  out.drift_coeff = [base, nb, dim](const Vector& anchor, double t) {
    if (anchor.size() != dim) throw DimensionError("augmented drift: anchor size mismatch");
    Matrix q = Matrix::Zero(dim, dim);
    Matrix qb = base.drift_coeff(anchor, t);
    if (qb.rows() != nb || qb.cols() != nb)
      throw DimensionError("augmented drift: base drift must be base_dim square");
    q.topLeftCorner(nb, nb) = qb;
    return q;
  };
  out.diffusion = [base, nb, np, dim, pseudo](double t) {
    const Matrix gb = base.diffusion(t);
    if (gb.rows() != nb) throw DimensionError("augmented diffusion: base diffusion row mismatch");
    Matrix g = Matrix::Zero(dim, gb.cols() + np);
    g.topLeftCorner(nb, gb.cols()) = gb;
    g.bottomRightCorner(np, np) = pseudo.asDiagonal();
    return g;
  };
  if (base.forcing) {
    out.forcing = [base, nb, dim](double t) {
      Vector f = Vector::Zero(dim);
      f.head(nb) = base.forcing(t);
      return f;
    };
  }
  return out;
}

Matrix psl_linearize(const ContinuousModel& m, const Vector& anchor, double t) {
  if (anchor.size() != m.state_dim)
    throw DimensionError("psl_linearize: anchor has size " + std::to_string(anchor.size()) +
                         ", model is " + std::to_string(m.state_dim) + "-dimensional");
  Matrix q = m.drift_coeff(anchor, t);
  if (q.rows() != m.state_dim || q.cols() != m.state_dim)
    throw DimensionError("psl_linearize: drift builder returned wrong shape");
  if (!q.allFinite()) throw NumericalError("psl_linearize: non-finite drift coefficient");
  return q;
}

Vector measure(const MeasurementModel& mm, const Vector& x, double t) {
  Vector z = mm.observe(x, t);
  if (z.size() != mm.obs_dim)
    throw DimensionError("measure: observation has size " + std::to_string(z.size()) +
                         ", model declares " + std::to_string(mm.obs_dim));
  return z;
}

Ensemble propagate_subensemble(const ProcessModel& model, const Ensemble& particles,
                               double t_from, double t_to, int step_index, RngStream& stream,
                               const PropagateOptions& opt) {
  if (const auto* c = std::get_if<ContinuousModel>(&model))
    return step_continuous(*c, particles, t_from, t_to, &stream, opt);
  return step_discrete(std::get<DiscreteModel>(model), particles, step_index, &stream);
}

Ensemble propagate_deterministic(const ProcessModel& model, const Ensemble& particles,
                                 double t_from, double t_to, int step_index,
                                 const PropagateOptions& opt) {
  if (const auto* c = std::get_if<ContinuousModel>(&model))
    return step_continuous(*c, particles, t_from, t_to, nullptr, opt);
  return step_discrete(std::get<DiscreteModel>(model), particles, step_index, nullptr);
}

}  // namespace igsf
