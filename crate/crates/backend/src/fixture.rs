//! Loading the synthetic case project into a repository.

use protobooth_analytics::CaseFixture;
use protobooth_core::ProjectId;

use crate::error::Result;
use crate::repo::Repository;

/// Store every part of `fixture` through the normal repository operations.
/// Returns the id the project received.
pub fn load_case_fixture(repo: &Repository, fixture: &CaseFixture) -> Result<ProjectId> {
    let user = &fixture.user;
    repo.create_user(user.user_id.clone(), user.display_name.clone())?;
    for card in &user.card_ids {
        repo.register_card(card.clone(), &user.user_id)?;
    }
    for record in &fixture.captures {
        repo.ingest(record, &fixture.images[&record.capture_id])?;
    }
    for scheme in &fixture.schemes {
        repo.create_scheme(scheme.clone())?;
    }
    for a in &fixture.assignments {
        repo.set_codes(&a.capture_id, &a.scheme_id, &a.categories)?;
    }

    let existing = repo
        .projects()
        .into_iter()
        .find(|p| p.title == fixture.project.title && p.members == fixture.project.members);
    let project_id = match existing {
        Some(p) => p.project_id,
        None => {
            let p = repo.create_project(
                fixture.project.title.clone(),
                fixture.project.description.clone(),
                &user.user_id,
            )?;
            let members: Vec<_> = fixture.project.members.iter().cloned().collect();
            repo.assign_to_project(&p.project_id, &members)?;
            p.project_id
        }
    };
    repo.put_links(
        &project_id,
        fixture.graph.node_classes.clone(),
        fixture.graph.edges.iter().cloned(),
    )?;
    Ok(project_id)
}
