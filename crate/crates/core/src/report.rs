//! Law results, the law registry and the JSON report format.

use serde::Serialize;

use crate::sampling::Check;

pub const REPORT_VERSION: &str = "1";

/// One evaluated law before it is attached to its registry entry.
#[derive(Debug, Clone, PartialEq)]
pub struct LawResult {
    pub law_id: &'static str,
    pub check: Check,
}

impl LawResult {
    pub fn new(law_id: &'static str, check: Check) -> Self {
        LawResult { law_id, check }
    }

    pub fn passed(&self) -> bool {
        self.check.passed
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LawInfo {
    pub id: &'static str,
    pub anchor: &'static str,
    pub statement: &'static str,
}

macro_rules! registry {
    ($($id:literal => $anchor:literal, $statement:literal;)*) => {
        pub const REGISTRY: &[LawInfo] = &[
            $(LawInfo { id: $id, anchor: $anchor, statement: $statement },)*
        ];
    };
}

registry! {
    "kernel-naturality-p" => "basic theory of tangent categories", "T(f) then p equals p then f";
    "kernel-naturality-zero" => "basic theory of tangent categories", "0 then T(f) equals f then 0";
    "kernel-naturality-ell" => "basic theory of tangent categories", "ℓ then T²(f) equals T(f) then ℓ";
    "kernel-naturality-flip" => "basic theory of tangent categories", "cT²(f) = T²(f)c";
    "kernel-flip-involution" => "basic theory of tangent categories", "c² = 1";
    "kernel-ell-flip" => "basic theory of tangent categories", "ℓc = ℓ";
    "kernel-ell-tangent-p" => "basic theory of tangent categories", "ℓT(p) = p0";
    "kernel-plus-commutative" => "basic theory of tangent categories", "fibrewise + is commutative";
    "kernel-plus-associative" => "basic theory of tangent categories", "fibrewise + is associative";
    "kernel-neg-inverse" => "basic theory of tangent categories", "− is a fibrewise inverse for +";
    "kernel-exact-symbolic" => "basic theory of tangent categories", "T of a polynomial agrees with its symbolic derivative";
    "kernel-exact-finite-difference" => "basic theory of tangent categories", "T agrees with central finite differences";
    "kernel-bracket-reconstruction" => r"bracket operation $\{ \}$ described in", "a vertical map is rebuilt from its bracket";
    "vf-linear-commutation" => r"if and only if $\hat{V_1}\hat{V_2} = \hat{V_2}\hat{V_1}$", "linear fields commute iff their matrices commute";
    "vf-commutes-symmetric" => r"commutes with $V_1$ if and only if", "commutation is symmetric";
    "vf-self-commutes" => "can be equipped with differential structure", "every field commutes with itself";
    "vf-bracket-relatedness" => r"is also a vector field morphism from $(M,[V_1,V_2])$", "morphisms relate brackets";
    "vf-bracket-jacobian" => r"$[V_1,V_2] := \{V_1T(V_2) - V_2T(V_1)c\}$", "bracket pipeline equals DV̂₂V̂₁ − DV̂₁V̂₂";
    "vf-bracket-finite-difference" => r"$[V_1,V_2] := \{V_1T(V_2) - V_2T(V_1)c\}$", "bracket pipeline equals a finite-difference bracket";
    "vf-commuting-pair-morphism" => "equivalent to a vector field in", "V₁, V₂ commute iff V₂ is a morphism into the tangent lift of V₁";
    "vf-tangent-lift-section" => r"$\bar{T}(M,V) := (TM,T(V)c)$", "T(V)c is a section of p_TM";
    "curve-c1-self-commutes" => "vector field which assigns the multiplicative unit", "c₁ commutes with itself";
    "sigma-addition" => r"$(t,x) \mapsto t+x$", "σ(t, s) = t + s";
    "sigma-unit" => "is a commutative monoid", "σ(0, s) = s = σ(s, 0)";
    "sigma-commutative" => "σ is a commutative operation", "σ(t, s) = σ(s, t)";
    "sigma-associative" => "is a commutative monoid", "σ is associative";
    "sigma-eta-inverse" => r"group with inverse $\eta$", "σ(t, η(t)) = 0";
    "flow-euler-solution" => r"unique) solution $s(x) = e^x$", "the Euler field from 1 reaches e at t = 1";
    "flow-blowup" => "no solution that exists for all time", "x' = x² from 1 collapses near t = 1";
    "flow-unit" => r"an action of $(C,\sigma,c_0)$ on $M$", "γ(0, x) = x";
    "flow-action" => r"an action of $(C,\sigma,c_0)$ on $M$", "γ(t, γ(s, x)) = γ(t + s, x)";
    "flow-own-invariance" => "every complete vector field is invariant", "a flow preserves its generator";
    "flow-equation-of-variation" => "(Equation of variation)", "the tangent flow is a flow generated by the tangent lift";
    "flow-generator-bijection" => "bijection between the set of complete vector fields", "generator and flow are mutually inverse";
    "flow-morphism-equivalence" => r"a map from $(M_1,\gamma_1)$", "field morphisms are exactly flow morphisms";
    "flow-tangent-solution" => r"solves the system $(TM,T(V)c,gV)$", "γV solves the tangent-lifted system";
    "flow-differential-object-criterion" => r"(where $D(\gamma) := T(\gamma)\hat{p}$", "full and p̂-projected solution squares co-vanish";
    "flow-determinism" => "preinitial dynamical system in all contexts", "identical inputs give bit-identical outputs";
    "flow-commuting-theorem" => r"The flows $\gamma_1, \gamma_2$ commute.", "commuting fields, commuting flows and invariance agree";
    "flow-sum" => r"their sum $\<V_1,V_2\>+$ is also a complete vector field", "composite of commuting flows is the flow of the sum";
    "flow-reversal" => "is an isomorphism, with inverse", "time-t and time-η(t) maps are inverse";
    "flow-nth-order" => r"$Vp = VT(p) = \ldots = VT^{n-1}(p) = 1$", "reduced second-order system matches its closed form";
    "flow-geodesic" => "zero acceleration relative to the connection", "geodesic curves have zero covariant acceleration";
    "flow-time-augmentation" => r"$y'(t) = y(t) + \cos(t)$", "clock augmentation solves the time-dependent equation";
    "rig-euler-linear" => r"$(\evf{A},0_M)$ is a linear vector field", "the Euler field is linear over λ";
    "rig-exp-closed-form" => r"$\expf{A}(t,x) = e^t \cdot x$", "exp flow equals (x, eᵗa)";
    "rig-exp-flow-laws" => "the (unique) flow of the Euler vector field", "exp flow satisfies the flow laws";
    "rig-de-exp-flow" => r"$D(e) = \expf{C}$", "D(e) equals the exp flow of C";
    "rig-mult-scalar" => r"$D^2(0,v,t',0) = t'v$", "multiplication from D²(e) is the scalar product";
    "rig-de-identity" => "differential exponential map is a map", "D(e)(0, v) = v";
    "rig-de-plus" => r"$e^{a+b} = e^a \cdot e^b$", "D(e)(a, e(b)) = e(a + b)";
    "rig-exp-homomorphism" => r"$e^{a+b} = e^a \cdot e^b$", "e(a + b) = e(a)·e(b)";
    "rig-mult-commutative" => "is a commutative differential rig", "multiplication is commutative";
    "rig-mult-associative" => "is a commutative differential rig", "multiplication is associative";
    "rig-mult-bilinear" => "is a commutative differential rig", "multiplication is bilinear";
    "rig-unit" => "$0e = u$", "e(0) = u and u is a multiplicative unit";
    "action-scaling" => r"$\{(\lambda \times 0)T(\expf{A})\}$", "⊙(s, (x, a)) = (x, s·a)";
    "action-unit" => "is a unit for the map", "⊙(1, −) = 1";
    "action-associative" => "is a commutative differential rig", "⊙(s, ⊙(r, p)) = ⊙(sr, p)";
    "action-additive" => r"(Linearity of $\action{A}$ in $C$)", "⊙ is additive in each argument";
    "action-derivative-lift" => r"is the lift map $\lambda: A \to TA$", "d/ds ⊙ at 0 equals λ";
    "action-solution" => r"solution to the system $(A_2,\<\mu,\pi_10\>", "⟨⊙, π₁⟩ solves (A₂, ⟨μ, π₁0⟩, ⟨qζ, 1⟩)";
    "action-linearity-equivalence" => "if and only if $f$ preserves the actions", "linear maps are exactly the action-preserving maps";
}

pub fn lookup(id: &str) -> Option<&'static LawInfo> {
    REGISTRY.iter().find(|l| l.id == id)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LawRecord {
    pub law_id: String,
    pub paper_anchor: String,
    pub passed: bool,
    pub max_residual: f64,
    pub witness: Vec<f64>,
}

impl From<&LawResult> for LawRecord {
    fn from(r: &LawResult) -> Self {
        let info =
            lookup(r.law_id).unwrap_or_else(|| panic!("law `{}` is not registered", r.law_id));
        LawRecord {
            law_id: info.id.to_string(),
            paper_anchor: info.anchor.to_string(),
            passed: r.check.passed,
            // JSON has no infinity; a non-finite residual is reported as the
            // largest finite value.
            max_residual: if r.check.max_residual.is_finite() {
                r.check.max_residual
            } else {
                f64::MAX
            },
            witness: r.check.witness.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub version: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub laws: Vec<LawRecord>,
}

impl Report {
    pub fn new(seed: u64, config: serde_json::Value, results: &[LawResult]) -> Self {
        Report {
            version: REPORT_VERSION.to_string(),
            seed,
            config,
            laws: results.iter().map(LawRecord::from).collect(),
        }
    }

    pub fn all_passed(&self) -> bool {
        self.laws.iter().all(|l| l.passed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
