use std::collections::{BTreeMap, BTreeSet};

use super::machine::MachineSpec;
use super::message::PortId;
use super::AcError;

/// A network of machines. Ports are either linked pairwise, sealed (a
/// declared but intentionally dead surface, like a filter's blocked outside
/// face), or open. Every open port carries an export name — the address a
/// distinguisher uses — so two differently-built wirings can present the
/// same surface.
#[derive(Clone, Debug, Default)]
pub struct Wiring {
    machines: Vec<MachineSpec>,
    links: Vec<(PortId, PortId)>,
    sealed: BTreeSet<PortId>,
    renames: BTreeMap<PortId, String>,
}

impl Wiring {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn machine(&self, name: &str) -> Option<&MachineSpec> {
        self.machines.iter().find(|m| m.name() == name)
    }

    pub fn machines(&self) -> &[MachineSpec] {
        &self.machines
    }

    pub fn links(&self) -> &[(PortId, PortId)] {
        &self.links
    }

    pub fn add_machine(&mut self, spec: MachineSpec) -> Result<(), AcError> {
        if self.machine(spec.name()).is_some() {
            return Err(AcError::Wiring(format!("duplicate machine name {:?}", spec.name())));
        }
        let mut seen = BTreeSet::new();
        for p in spec.ports() {
            if !seen.insert(p) {
                return Err(AcError::Wiring(format!(
                    "machine {:?} declares port {p:?} twice",
                    spec.name()
                )));
            }
        }
        self.machines.push(spec);
        Ok(())
    }

    fn check_known(&self, p: &PortId) -> Result<(), AcError> {
        let Some(m) = self.machine(&p.machine) else {
            return Err(AcError::Wiring(format!("unknown machine in port {p}")));
        };
        if !m.ports().iter().any(|q| q == &p.port) {
            return Err(AcError::Wiring(format!("machine {:?} has no port {:?}", p.machine, p.port)));
        }
        Ok(())
    }

    fn is_taken(&self, p: &PortId) -> bool {
        self.sealed.contains(p) || self.links.iter().any(|(a, b)| a == p || b == p)
    }

    pub fn link(&mut self, a: impl Into<PortId>, b: impl Into<PortId>) -> Result<(), AcError> {
        let (a, b) = (a.into(), b.into());
        self.check_known(&a)?;
        self.check_known(&b)?;
        if a == b {
            return Err(AcError::Wiring(format!("cannot link {a} to itself")));
        }
        for p in [&a, &b] {
            if self.is_taken(p) {
                return Err(AcError::Wiring(format!("port {p} is already linked or sealed")));
            }
            self.renames.remove(p);
        }
        self.links.push((a, b));
        Ok(())
    }

    /// Declare a port permanently silent: not linked, not observable. Any
    /// emission on it aborts the run.
    pub fn seal(&mut self, p: impl Into<PortId>) -> Result<(), AcError> {
        let p = p.into();
        self.check_known(&p)?;
        if self.is_taken(&p) {
            return Err(AcError::Wiring(format!("port {p} is already linked or sealed")));
        }
        self.renames.remove(&p);
        self.sealed.insert(p);
        Ok(())
    }

    /// Give an open port a stable external name.
    pub fn export_as(&mut self, p: impl Into<PortId>, name: impl Into<String>) -> Result<(), AcError> {
        let p = p.into();
        self.check_known(&p)?;
        if self.is_taken(&p) {
            return Err(AcError::Wiring(format!("port {p} is not open")));
        }
        let name = name.into();
        let exports = self.exports();
        if let Some(existing) = exports.get(&name) {
            if *existing != p {
                return Err(AcError::Wiring(format!("export name {name:?} already used by {existing}")));
            }
        }
        self.renames.insert(p, name);
        Ok(())
    }

    /// Export name -> open port. Unrenamed open ports appear under their
    /// canonical `machine.port` name.
    pub fn exports(&self) -> BTreeMap<String, PortId> {
        let mut out = BTreeMap::new();
        for m in &self.machines {
            for port in m.ports() {
                let pid = PortId::new(m.name(), port.clone());
                if self.is_taken(&pid) {
                    continue;
                }
                let name = self
                    .renames
                    .get(&pid)
                    .cloned()
                    .unwrap_or_else(|| pid.to_string());
                out.insert(name, pid);
            }
        }
        out
    }

    pub fn export_names(&self) -> BTreeSet<String> {
        self.exports().into_keys().collect()
    }

    /// Resolution map used by the kernel: open port -> export name.
    pub(crate) fn export_names_by_port(&self) -> BTreeMap<PortId, String> {
        self.exports().into_iter().map(|(n, p)| (p, n)).collect()
    }

    pub(crate) fn peer_of(&self, p: &PortId) -> Option<&PortId> {
        self.links.iter().find_map(|(a, b)| {
            if a == p {
                Some(b)
            } else if b == p {
                Some(a)
            } else {
                None
            }
        })
    }

    pub(crate) fn is_sealed(&self, p: &PortId) -> bool {
        self.sealed.contains(p)
    }

    pub fn validate(&self) -> Result<(), AcError> {
        let mut seen: BTreeSet<&PortId> = BTreeSet::new();
        for (a, b) in &self.links {
            self.check_known(a)?;
            self.check_known(b)?;
            for p in [a, b] {
                if !seen.insert(p) {
                    return Err(AcError::Wiring(format!("port {p} appears in two links")));
                }
                if self.sealed.contains(p) {
                    return Err(AcError::Wiring(format!("port {p} both linked and sealed")));
                }
            }
        }
        // Export-name collisions (renames vs canonical names).
        let mut names = BTreeSet::new();
        for name in self.exports().keys() {
            if !names.insert(name.clone()) {
                return Err(AcError::Wiring(format!("duplicate export name {name:?}")));
            }
        }
        Ok(())
    }

    /// Attach a converter: bind some of its ports to currently open ports
    /// (by export name); its remaining ports become part of the new surface.
    pub fn attach(&self, spec: MachineSpec, bindings: &[(&str, &str)]) -> Result<Self, AcError> {
        let mut out = self.clone();
        let exports = self.exports();
        let name = spec.name().to_string();
        out.add_machine(spec)?;
        for (inner_port, export_name) in bindings {
            let target = exports.get(*export_name).ok_or_else(|| {
                AcError::Wiring(format!("no open port exported as {export_name:?}"))
            })?;
            out.link(PortId::new(name.clone(), inner_port.to_string()), target.clone())?;
        }
        out.validate()?;
        Ok(out)
    }

    /// Disjoint union of two wirings. Machine names and export names must
    /// not collide.
    pub fn parallel(&self, other: &Wiring) -> Result<Self, AcError> {
        let mut out = self.clone();
        for m in &other.machines {
            out.add_machine(m.clone())?;
        }
        for (a, b) in &other.links {
            out.link(a.clone(), b.clone())?;
        }
        for p in &other.sealed {
            out.seal(p.clone())?;
        }
        for (p, n) in &other.renames {
            out.export_as(p.clone(), n.clone())?;
        }
        out.validate()?;
        Ok(out)
    }

    /// Structured description (machines, links, surface) for debugging and
    /// logs.
    pub fn describe(&self) -> String {
        let machines: Vec<_> = self
            .machines
            .iter()
            .map(|m| {
                serde_json::json!({
                    "name": m.name(),
                    "ports": m.ports(),
                })
            })
            .collect();
        let links: Vec<_> = self
            .links
            .iter()
            .map(|(a, b)| serde_json::json!([a.to_string(), b.to_string()]))
            .collect();
        let sealed: Vec<_> = self.sealed.iter().map(|p| p.to_string()).collect();
        let exports: BTreeMap<String, String> = self
            .exports()
            .into_iter()
            .map(|(n, p)| (n, p.to_string()))
            .collect();
        serde_json::to_string_pretty(&serde_json::json!({
            "machines": machines,
            "links": links,
            "sealed": sealed,
            "exports": exports,
        }))
        .expect("wiring description cannot fail to serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::super::machine::{Machine, MachineError, StepCtx};
    use super::super::message::Message;
    use super::*;

    struct Nop;
    impl Machine for Nop {
        fn step(
            &mut self,
            _port: &str,
            _msg: Message,
            _ctx: &mut StepCtx<'_>,
        ) -> Result<Vec<(String, Message)>, MachineError> {
            Ok(vec![])
        }
    }

    fn nop(name: &str, ports: &[&str]) -> MachineSpec {
        MachineSpec::new(name, ports.iter().map(|s| s.to_string()).collect(), || Nop)
    }

    #[test]
    fn exports_track_linking_and_sealing() {
        let mut w = Wiring::new();
        w.add_machine(nop("a", &["x", "y"])).unwrap();
        w.add_machine(nop("b", &["z"])).unwrap();
        assert_eq!(
            w.export_names().into_iter().collect::<Vec<_>>(),
            vec!["a.x".to_string(), "a.y".to_string(), "b.z".to_string()]
        );
        w.link(PortId::new("a", "x"), PortId::new("b", "z")).unwrap();
        w.seal(PortId::new("a", "y")).unwrap();
        assert!(w.export_names().is_empty());
        assert!(w.link(PortId::new("a", "x"), PortId::new("b", "z")).is_err());
    }

    #[test]
    fn rename_gives_stable_surface_names() {
        let mut w = Wiring::new();
        w.add_machine(nop("alice_converter", &["ext"])).unwrap();
        w.export_as(PortId::new("alice_converter", "ext"), "alice").unwrap();
        assert!(w.export_names().contains("alice"));
        w.validate().unwrap();
    }

    #[test]
    fn attach_closes_bound_ports_and_opens_new_ones() {
        let mut w = Wiring::new();
        w.add_machine(nop("res", &["left", "right"])).unwrap();
        let attached = w.attach(nop("conv", &["inner", "outer"]), &[("inner", "res.left")]).unwrap();
        let names = attached.export_names();
        assert!(names.contains("res.right"));
        assert!(names.contains("conv.outer"));
        assert!(!names.contains("res.left"));
        assert!(!names.contains("conv.inner"));
        // Attaching in either order yields the same surface.
        let mut w2 = Wiring::new();
        w2.add_machine(nop("res", &["left", "right"])).unwrap();
        let a = w2
            .attach(nop("c1", &["p"]), &[("p", "res.left")])
            .unwrap()
            .attach(nop("c2", &["q"]), &[("q", "res.right")])
            .unwrap();
        let b = w2
            .attach(nop("c2", &["q"]), &[("q", "res.right")])
            .unwrap()
            .attach(nop("c1", &["p"]), &[("p", "res.left")])
            .unwrap();
        assert_eq!(a.export_names(), b.export_names());
    }

    #[test]
    fn parallel_requires_disjoint_names() {
        let mut w1 = Wiring::new();
        w1.add_machine(nop("a", &["x"])).unwrap();
        let mut w2 = Wiring::new();
        w2.add_machine(nop("b", &["y"])).unwrap();
        let both = w1.parallel(&w2).unwrap();
        assert_eq!(both.export_names().len(), 2);
        assert!(w1.parallel(&w1).is_err());
    }
}
