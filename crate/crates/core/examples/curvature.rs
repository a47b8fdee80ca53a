// Level-set curvature of a single bump is -(d-1)/r at distance r from its
// center. Both formulas agree with it.
use elastica::kernel::{RbfBasis, RbfModel, Task};
use elastica::variational::{curvature, curvature_by_f_terms, div_v, ElasticaParams, DEFAULT_EPS_GRAD};

fn main() -> elastica::Result<()> {
    for d in [2, 3, 5] {
        let model = RbfModel::new(RbfBasis::new(vec![0.0; d], d, 0.8)?, vec![1.0], Task::Regression)?;
        let mut x = vec![0.0; d];
        x[0] = 0.6;
        let params = ElasticaParams { b: 0.01, ..ElasticaParams::default() };
        println!(
            "d = {d}: exact {:+.8}  hessian {:+.8}  f-terms {:+.8}  div V (b = 0.01) {:+.6}",
            -((d - 1) as f64) / 0.6,
            curvature(&model, &x, DEFAULT_EPS_GRAD)?,
            curvature_by_f_terms(&model, &x, DEFAULT_EPS_GRAD)?,
            div_v(&model, &x, &params)?,
        );
    }
    Ok(())
}
