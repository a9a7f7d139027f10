#include "slag/deform.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

namespace slag {

namespace {

// Orthonormal basis of the orthogonal complement of the span of `cols`.
Mat orthogonalComplement(const Mat& cols) {
    const int d = static_cast<int>(cols.rows());
    Eigen::JacobiSVD<Mat> svd(cols, Eigen::ComputeFullU);
    svd.setThreshold(1e-10);
    return svd.matrixU().rightCols(d - svd.rank());
}

}  // namespace

DeformContext::DeformContext(const SimplicialPatch& M, const BoundaryData& B, const Scaffold& W)
    : M_(&M), B_(&B), W_(&W), amb_(M.n), ownRetractor_(W), retractor_(&ownRetractor_) {
    if (M.n != 2)
        throw ValidationError("deform: the deformation stack is built for surfaces (n = 2)");
    assignment_ = assignScaffoldComponents(W, M, B);

    tangentBases_ = vertexTangentBases(M);
    const std::vector<Mat>& tangent = tangentBases_;
    const int V = M.vertexCount();
    motionBasis_.resize(V);
    dofOffset_.assign(V, 0);
    for (int v = 0; v < V; ++v) {
        // g-normal space of L at the vertex (= J T_v L on a Lagrangian patch).
        Mat normal = orthogonalComplement(tangent[v]);
        int row = B.indexOf(v);
        if (row >= 0) {
            // add omega(V, N) = 0: one linear condition on the normal coeffs
            Vec N = B.normals.row(row);
            Vec c(normal.cols());
            for (int j = 0; j < normal.cols(); ++j) c[j] = amb_.omega(normal.col(j), N);
            if (c.norm() > 1e-13) {
                Mat cc = c / c.norm();
                Mat Q = orthogonalComplement(cc);
                normal = (normal * Q).eval();
            }
        }
        motionBasis_[v] = normal;
        dofOffset_[v] = dofCount_;
        dofCount_ += static_cast<int>(normal.cols());
    }
}

Mat DeformContext::fieldFromCoeffs(const Vec& u) const {
    if (u.size() != dofCount_)
        throw ValidationError("deform: coefficient vector has wrong length");
    const int V = M_->vertexCount(), D = M_->ambientDim();
    Mat field = Mat::Zero(V, D);
    for (int v = 0; v < V; ++v) {
        const Mat& basis = motionBasis_[v];
        field.row(v) = (basis * u.segment(dofOffset_[v], basis.cols())).transpose();
    }
    return field;
}

Vec DeformContext::coeffsFromField(const Mat& field) const {
    Vec u(dofCount_);
    for (int v = 0; v < M_->vertexCount(); ++v) {
        const Mat& basis = motionBasis_[v];
        u.segment(dofOffset_[v], basis.cols()) = basis.transpose() * Vec(field.row(v));
    }
    return u;
}

void DeformContext::validateField(const Mat& field) const {
    if (field.rows() != M_->vertexCount() || field.cols() != M_->ambientDim())
        throw ValidationError("deform: field shape mismatch");
    const std::vector<Mat>& tangent = tangentBases_;
    double h = M_->meshSize();
    for (int v = 0; v < M_->vertexCount(); ++v) {
        Vec V = field.row(v);
        double mag = V.norm();
        if (mag == 0.0) continue;
        if ((tangent[v].transpose() * V).norm() > 1e-10 * std::max(1.0, mag))
            throw ValidationError("deform: field is not normal to L at vertex " +
                                  std::to_string(v));
        int row = B_->indexOf(v);
        if (row >= 0) {
            Vec N = B_->normals.row(row);
            if (std::abs(amb_.omega(V, N)) > 1e-10 * std::max(1.0, mag))
                throw ValidationError("deform: omega(V, N) != 0 at boundary vertex " +
                                      std::to_string(v));
            // first-order tangency of admissible fields to the scaffold
            ScaffoldEval ev = W_->eval(assignment_[row], M_->vertices.row(v));
            double df = std::max(std::abs(ev.g1.dot(V)), std::abs(ev.g2.dot(V)));
            if (df > 5.0 * h * mag)
                throw ValidationError(
                    "deform: field misses the scaffold tangency bound at boundary vertex " +
                    std::to_string(v));
        }
    }
}

Mat DeformContext::retract(const Mat& field) const {
    Mat pos = M_->vertices + field;
    for (size_t i = 0; i < B_->vertexIds.size(); ++i) {
        int v = B_->vertexIds[i];
        pos.row(v) = retractor_->project(assignment_[i], pos.row(v)).transpose();
    }
    return pos;
}

std::pair<Cochain, Cochain> residualCochains(const SimplicialPatch& M, const Mat& positions,
                                             double theta) {
    Ambient amb(M.n);
    const int T = M.simplexCount();
    Cochain alpha = Cochain::zero(M.n, T);
    for (int t = 0; t < T; ++t) {
        Mat pts(M.n + 1, M.ambientDim());
        for (int j = 0; j <= M.n; ++j) pts.row(j) = positions.row(M.simplices(t, j));
        double h = longestEdge(pts);
        if (simplexVolume(pts) < 1e-12 * std::pow(h, M.n) || h == 0.0)
            throw SolveError("deform.residual: deformed simplex " + std::to_string(t) +
                             " is degenerate");
        alpha.values[t] = -amb.alphaIntegral(pts, theta).imag();
    }
    Cochain omega;
    if (M.n == 2) {
        // 2-faces are the simplices themselves, in the stored orientation.
        omega = Cochain::zero(2, T);
        for (int t = 0; t < T; ++t)
            omega.values[t] = amb.omegaIntegral(positions.row(M.simplices(t, 0)),
                                                positions.row(M.simplices(t, 1)),
                                                positions.row(M.simplices(t, 2)));
    } else {
        omega = Cochain::zero(2, M.faceCount(2));
        for (int f = 0; f < M.faceCount(2); ++f) {
            const auto& verts = M.complex.faces[2][f];
            omega.values[f] = amb.omegaIntegral(positions.row(verts[0]), positions.row(verts[1]),
                                                positions.row(verts[2]));
        }
    }
    return {std::move(omega), std::move(alpha)};
}

DeformationState makeState(const DeformContext& ctx, const Mat& field, double theta) {
    ctx.validateField(field);  // constraint violations are rejected before retracting
    DeformationState st;
    st.field = field;
    st.theta = theta;
    st.positions = ctx.retract(field);
    ctx.patch().withVertices(st.positions);  // degeneracy check
    auto [ro, ra] = residualCochains(ctx.patch(), st.positions, theta);
    st.residualOmega = std::move(ro);
    st.residualAlpha = std::move(ra);
    st.normOmega =
        st.residualOmega.values.size() ? st.residualOmega.values.cwiseAbs().maxCoeff() : 0.0;
    st.normAlpha =
        st.residualAlpha.values.size() ? st.residualAlpha.values.cwiseAbs().maxCoeff() : 0.0;
    return st;
}

double bestFitTheta(const SimplicialPatch& M) {
    Ambient amb(M.n);
    Complex total = 0.0;
    for (int t = 0; t < M.simplexCount(); ++t) {
        Mat pts(M.n + 1, M.ambientDim());
        for (int j = 0; j <= M.n; ++j) pts.row(j) = M.vertices.row(M.simplices(t, j));
        total += amb.alphaIntegral(pts, 0.0);
    }
    return principalAngle(std::arg(total));
}

LinearizedOperator::LinearizedOperator(const DeformContext& ctx, const DeformationState& at)
    : ctx_(&ctx) {
    const SimplicialPatch& M = ctx.patch();
    const Ambient& amb = ctx.ambient();
    const int T = M.simplexCount();
    const int dof = ctx.dofCount();
    const int D = M.ambientDim();
    J_ = Mat::Zero(2 * T, dof + 1);

    // Motion directions per vertex, pushed through the retraction
    // differential at the current pre-projection points.
    const int V = M.vertexCount();
    std::vector<Mat> moved(V);
    for (int v = 0; v < V; ++v) {
        const Mat& basis = ctx.motionBasis(v);
        int row = ctx.boundaryRow(v);
        if (row < 0) {
            moved[v] = basis;
        } else {
            Vec pre = Vec(M.vertices.row(v)) + Vec(at.field.row(v));
            Mat dP = ctx.retractor().differential(ctx.scaffoldAssignment()[row], pre);
            moved[v] = dP * basis;
        }
    }

    Complex phase = std::exp(Complex(0.0, -at.theta));
    Vec zero = Vec::Zero(D);
    for (int t = 0; t < T; ++t) {
        int i0 = M.simplices(t, 0), i1 = M.simplices(t, 1), i2 = M.simplices(t, 2);
        Vec p0 = at.positions.row(i0), p1 = at.positions.row(i1), p2 = at.positions.row(i2);
        Vec e1 = p1 - p0, e2 = p2 - p0;
        Eigen::Matrix2cd Z;
        Z.col(0) = amb.complexify(e1);
        Z.col(1) = amb.complexify(e2);
        Complex detZ = Z.determinant();

        // theta column: d/dtheta [-Im(e^{-i theta} det Z / 2)]
        J_(T + t, dof) = (phase * detZ).real() / 2.0;

        for (int corner = 0; corner < 3; ++corner) {
            int v = M.simplices(t, corner);
            const Mat& dirs = moved[v];
            for (int c = 0; c < dirs.cols(); ++c) {
                Vec w = dirs.col(c);
                Vec de1 = (corner == 1) ? w : (corner == 0 ? Vec(-w) : zero);
                Vec de2 = (corner == 2) ? w : (corner == 0 ? Vec(-w) : zero);
                int col = ctx.dofOffset(v) + c;
                J_(t, col) += 0.5 * (amb.omega(de1, e2) + amb.omega(e1, de2));
                Eigen::Matrix2cd dZ1 = Z, dZ2 = Z;
                dZ1.col(0) = amb.complexify(de1);
                dZ2.col(1) = amb.complexify(de2);
                Complex ddet = dZ1.determinant() + dZ2.determinant();
                J_(T + t, col) += -(phase * ddet).imag() / 2.0;
            }
        }
    }
}

std::pair<Cochain, Cochain> LinearizedOperator::applyCoeffs(const Vec& u, double a) const {
    const SimplicialPatch& M = ctx_->patch();
    const int T = M.simplexCount();
    Vec uu(u.size() + 1);
    uu.head(u.size()) = u;
    uu[u.size()] = a;
    Vec r = J_ * uu;
    return {Cochain(2, r.head(T)), Cochain(M.n, r.tail(T))};
}

std::pair<Cochain, Cochain> LinearizedOperator::apply(const Mat& field, double a) const {
    return applyCoeffs(ctx_->coeffsFromField(field), a);
}

Cochain LinearizedOperator::contractionCochain(const SimplicialPatch& M, const Mat& field) {
    Ambient amb(M.n);
    Cochain eta = Cochain::zero(1, M.faceCount(1));
    for (int e = 0; e < M.faceCount(1); ++e) {
        const auto& verts = M.complex.faces[1][e];
        Vec avg = 0.5 * (field.row(verts[0]) + field.row(verts[1]));
        Vec edge = M.vertices.row(verts[1]) - M.vertices.row(verts[0]);
        eta.values[e] = amb.omega(avg, edge);
    }
    return eta;
}

LinearizedOperator linearizeAtZero(const DeformContext& ctx) {
    Mat zero = Mat::Zero(ctx.patch().vertexCount(), ctx.patch().ambientDim());
    DeformationState base = makeState(ctx, zero, 0.0);
    if (base.residualNorm() > 1e-8)
        throw ValidationError(
            "deform.linearize_at_zero: base patch is not special Lagrangian (residual " +
            std::to_string(base.residualNorm()) + ")");
    return LinearizedOperator(ctx, base);
}

NewtonResult newtonSolve(const DeformContext& ctx, const DeformationState& initial,
                         const NewtonOptions& opt) {
    const int dof = ctx.dofCount();
    NewtonResult res;
    res.totalStep = Vec::Zero(dof + 1);

    Vec u(dof + 1);
    u.head(dof) = ctx.coeffsFromField(initial.field);
    u[dof] = initial.theta;
    DeformationState state = initial;
    res.history.push_back(state.residualNorm());

    auto evaluate = [&](const Vec& uu) {
        return makeState(ctx, ctx.fieldFromCoeffs(uu.head(dof)), principalAngle(uu[dof]));
    };

    // Kernel deflation restricts the unknowns to the orthogonal complement
    // of the moduli directions before the least-squares solve; projecting a
    // raw step afterwards would leave the large near-singular component
    // unbalanced.
    Mat Z;
    if (!opt.deflateCoeffs.empty()) {
        Mat K = Mat::Zero(dof + 1, static_cast<int>(opt.deflateCoeffs.size()));
        for (size_t j = 0; j < opt.deflateCoeffs.size(); ++j) {
            K.col(static_cast<int>(j)).head(dof) = opt.deflateCoeffs[j];
        }
        Eigen::JacobiSVD<Mat> ksvd(K, Eigen::ComputeFullU);
        ksvd.setThreshold(1e-10);
        Z = ksvd.matrixU().rightCols(dof + 1 - ksvd.rank());
    }

    for (int iter = 0; iter < opt.maxIter; ++iter) {
        if (state.residualNorm() <= opt.tol) {
            res.state = std::move(state);
            res.iterations = iter;
            return res;
        }
        LinearizedOperator lin(ctx, state);
        Mat J = lin.matrix();
        if (Z.size()) J = (J * Z).eval();
        Vec R(J.rows());
        R.head(J.rows() / 2) = state.residualOmega.values;
        R.tail(J.rows() / 2) = state.residualAlpha.values;

        Eigen::BDCSVD<Mat> svd(J, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const auto& sv = svd.singularValues();
        double thresh = 1e-8 * sv(0);
        int rank = 0;
        for (int i = 0; i < sv.size(); ++i)
            if (sv(i) > thresh) ++rank;
        if (rank == 0)
            throw SolveError("deform.newton_solve: linearization rank collapse");
        Vec y = svd.matrixU().transpose() * (-R);
        for (int i = 0; i < sv.size(); ++i) y[i] = (sv(i) > thresh) ? y[i] / sv(i) : 0.0;
        Vec step = svd.matrixV() * y;
        if (Z.size()) step = (Z * step).eval();

        if (opt.stallStep > 0.0 && step.norm() <= opt.stallStep) {
            res.state = std::move(state);
            res.iterations = iter;
            res.stalled = true;
            return res;
        }

        // Damping: halve up to 10 times until the residual decreases.
        double lambda = 1.0;
        bool accepted = false;
        for (int half = 0; half <= 10; ++half, lambda *= 0.5) {
            try {
                DeformationState trial = evaluate(u + lambda * step);
                if (trial.residualNorm() < state.residualNorm()) {
                    u += lambda * step;
                    res.totalStep += lambda * step;
                    state = std::move(trial);
                    accepted = true;
                    break;
                }
            } catch (const SolveError&) {
                // degenerate simplex or projection failure: shrink the step
            }
        }
        if (!accepted) {
            if (opt.stallStep > 0.0) {
                res.state = std::move(state);
                res.iterations = iter;
                res.stalled = true;
                return res;
            }
            throw SolveError("deform.newton_solve: step damping failed to reduce the residual");
        }
        res.history.push_back(state.residualNorm());
    }
    if (state.residualNorm() <= opt.tol) {
        res.state = std::move(state);
        res.iterations = opt.maxIter;
        return res;
    }
    throw SolveError("deform.newton_solve: no convergence within " + std::to_string(opt.maxIter) +
                     " iterations (residual " + std::to_string(state.residualNorm()) + ")");
}

std::vector<Mat> moduliBasis(const DeformContext& ctx, const HodgeSystem& H) {
    const SimplicialPatch& M = ctx.patch();
    const Ambient& amb = ctx.ambient();
    std::vector<Mat> out;
    for (const Cochain& eta : H.harmonicBasis()) {
        Mat X = H.dec().whitneyVectors(eta);
        Mat raw(M.vertexCount(), M.ambientDim());
        for (int v = 0; v < M.vertexCount(); ++v) raw.row(v) = amb.J(X.row(v)).transpose();
        Mat field = ctx.fieldFromCoeffs(ctx.coeffsFromField(raw));
        // orient so the induced 1-form matches eta
        Cochain etaV = LinearizedOperator::contractionCochain(M, field);
        if (H.dec().inner(etaV, eta) < 0.0) field = -field;
        double sup = field.rowwise().norm().maxCoeff();
        if (sup > 0.0) field /= sup;
        out.push_back(std::move(field));
    }
    return out;
}

NewtonResult moduliStep(const DeformContext& ctx, const HodgeSystem& H, const Mat& direction,
                        double step, NewtonOptions opt) {
    std::vector<Mat> basis = moduliBasis(ctx, H);
    for (const Mat& b : basis) {
        Vec k = ctx.coeffsFromField(b);
        opt.deflateCoeffs.push_back(k / k.norm());
    }
    // Along a curved family the per-simplex residual bottoms out at the
    // discretization error; stop when the deflated step stalls there.
    if (opt.stallStep == 0.0) opt.stallStep = 1e-9;
    DeformationState initial = makeState(ctx, step * direction, 0.0);
    NewtonResult res = newtonSolve(ctx, initial, opt);
    double kc = 0.0;
    for (const Vec& k : opt.deflateCoeffs)
        kc = std::max(kc, std::abs(k.dot(res.totalStep.head(ctx.dofCount()))));
    res.kernelComponent = kc;
    return res;
}

}  // namespace slag
