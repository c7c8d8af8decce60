use super::ratfn::{Bindings, RatFn};
use super::registry::Var;
use super::AlgebraError;

/// True iff `f` becomes identically zero once every solved-form constraint
/// `v = g` is imposed.
///
/// The constraints must be triangular: no `g` mentions its own symbol and the
/// "mentions" relation between solved symbols has no cycle.
pub fn vanishes_on_variety(f: &RatFn, constraints: &[(Var, RatFn)]) -> Result<bool, AlgebraError> {
    let reg = f.registry().clone();
    let solved: Vec<Var> = constraints.iter().map(|(v, _)| *v).collect();
    for (i, (v, g)) in constraints.iter().enumerate() {
        if solved[..i].contains(v) {
            return Err(AlgebraError::NonTriangular(format!(
                "`{}` solved twice",
                reg.name(*v)
            )));
        }
        if g.contains_var(*v) {
            return Err(AlgebraError::NonTriangular(format!(
                "`{}` appears in its own value",
                reg.name(*v)
            )));
        }
    }
    // Depth-first cycle detection over the dependency graph.
    let deps: Vec<Vec<usize>> = constraints
        .iter()
        .map(|(_, g)| {
            (0..solved.len())
                .filter(|&j| g.contains_var(solved[j]))
                .collect()
        })
        .collect();
    let mut state = vec![0u8; solved.len()];
    fn visit(i: usize, deps: &[Vec<usize>], state: &mut [u8]) -> bool {
        match state[i] {
            1 => return false,
            2 => return true,
            _ => {}
        }
        state[i] = 1;
        for &j in &deps[i] {
            if !visit(j, deps, state) {
                return false;
            }
        }
        state[i] = 2;
        true
    }
    for (i, &v) in solved.iter().enumerate() {
        if !visit(i, &deps, &mut state) {
            return Err(AlgebraError::NonTriangular(format!(
                "cyclic dependency through `{}`",
                reg.name(v)
            )));
        }
    }
    let bindings: Bindings = constraints.iter().cloned().collect();
    let mut g = f.clone();
    for _ in 0..=solved.len() {
        if !solved.iter().any(|&v| g.contains_var(v)) {
            break;
        }
        g = g.substitute(&bindings)?;
    }
    Ok(g.is_zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{sym, var};

    #[test]
    fn product_vanishes_on_coordinate_hyperplane() {
        let f = sym("x").scale(&crate::algebra::q(4, 1)) * sym("y");
        let zero = RatFn::zero(f.registry());
        assert!(vanishes_on_variety(&f, &[(var("y"), zero.clone())]).unwrap());
        let g = &f + &sym("alpha2").scale(&crate::algebra::q(2, 1));
        assert!(!vanishes_on_variety(&g, &[(var("y"), zero)]).unwrap());
    }

    #[test]
    fn cyclic_constraints_rejected() {
        let c = [(var("x"), sym("y")), (var("y"), sym("x"))];
        assert!(matches!(
            vanishes_on_variety(&sym("x"), &c),
            Err(AlgebraError::NonTriangular(_))
        ));
        let own = [(var("x"), &sym("x") + &sym("y"))];
        assert!(vanishes_on_variety(&sym("x"), &own).is_err());
    }

    #[test]
    fn chained_constraints_substitute_fully() {
        // z = -x, y = x^2 + w + t: x + z and y - x^2 - w - t both vanish
        let c = [
            (var("z"), -sym("x")),
            (
                var("y"),
                &(&(&sym("x") * &sym("x")) + &sym("w")) + &sym("t"),
            ),
        ];
        assert!(vanishes_on_variety(&(&sym("x") + &sym("z")), &c).unwrap());
        let f = &(&(&sym("y") - &(&sym("x") * &sym("x"))) - &sym("w")) - &sym("t");
        assert!(vanishes_on_variety(&f, &c).unwrap());
    }
}
